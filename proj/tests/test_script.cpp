#include <gtest/gtest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "vbe/script.hpp"

using namespace vbe;

namespace {

json load(std::string const &name)
{
  std::ifstream in(std::string(VBE_DATA_DIR) + "/" + name);
  std::stringstream ss;
  ss << in.rdbuf();
  return json::parse(ss.str());
}

std::set<std::string> keys_in(std::vector<ojson> const &log)
{
  std::set<std::string> out;
  for (auto const &l : log)
    for (auto it = l.begin(); it != l.end(); ++it)
      out.insert(it.key());
  return out;
}

}  // namespace

TEST(Script, DataScriptsRunClean)
{
  for (auto const *name : {"basic.json", "lite.json", "attack.json"})
  {
    auto r = run_script(load(name), 7);
    EXPECT_EQ(r.mismatches, 0) << name << "\n" << r.report.dump(2);
    EXPECT_EQ(r.report["mismatches"], 0);
    EXPECT_TRUE(std::string(name) == "attack.json" || !r.public_log.empty()) << name;
  }
}

TEST(Script, AttackRates)
{
  auto r = run_script(load("attack.json"), 7);
  auto const &steps = r.report["steps"];
  ASSERT_EQ(steps.size(), 2u);
  EXPECT_EQ(steps[0]["result"]["rate"].get<double>(), 1.0);
  EXPECT_EQ(steps[0]["result"]["linked"].size(), 10u);
  EXPECT_EQ(steps[0]["result"]["victims"], 10);
  EXPECT_TRUE(steps[1]["result"]["linked"].empty());
  EXPECT_EQ(steps[1]["result"]["rate"].get<double>(), 0.0);
}

TEST(Script, Deterministic)
{
  for (auto const *name : {"basic.json", "lite.json", "attack.json"})
  {
    auto a = run_script(load(name), 11), b = run_script(load(name), 11);
    EXPECT_EQ(a.report.dump(), b.report.dump());
    EXPECT_EQ(detail::jsonl(a.public_log), detail::jsonl(b.public_log));
    EXPECT_EQ(detail::jsonl(a.confidential_log), detail::jsonl(b.confidential_log));
  }
}

TEST(Script, MalformedScriptsAreInputErrors)
{
  EXPECT_THROW(run_script(json::parse(R"({"protocol":"nope","steps":[]})"), 1), InputError);
  EXPECT_THROW(run_script(json::parse(R"({"protocol":"basic"})"), 1), InputError);
  EXPECT_THROW(run_script(json::parse(R"({"protocol":"basic","steps":[],"extra":1})"), 1), InputError);
  EXPECT_THROW(run_script(json::parse(R"({"protocol":"basic","policy":"odd","steps":[]})"), 1), InputError);
  EXPECT_THROW(run_script(json::parse(R"({"protocol":"basic","steps":[{"op":"dance"}]})"), 1), InputError);
  EXPECT_THROW(run_script(json::parse(R"({"protocol":"lite","steps":[{"op":"dance"}]})"), 1), InputError);
  EXPECT_THROW(run_script(json::parse(R"({"protocol":"basic","steps":[3]})"), 1), InputError);
  EXPECT_THROW(run_script(json::parse(R"({"protocol":"basic","steps":[{"op":"take_bribe","party":"a","key":"k","bribe":"b"}]})"), 1),
               InputError);
  EXPECT_THROW(run_script(json::parse(R"({"protocol":"basic","steps":[{"op":"fund","party":"a","amount":1,"typo":2}]})"), 1),
               InputError);
}

TEST(Script, WrongExpectationCountsAsMismatch)
{
  auto r = run_script(json::parse(R"({"protocol":"basic","steps":[
    {"op":"fund","party":"a","amount":5,"expect_error":"insufficient-funds"},
    {"op":"register_bribe","briber":"b","amount":1,"proposal":"p","deposit":5},
    {"op":"register_bribe","briber":"c","amount":1,"proposal":"p","deposit":5,"expect_error":"wrong-party"}]})"),
                      1);
  EXPECT_EQ(r.mismatches, 3);
  for (auto const &s : r.report["steps"])
    EXPECT_FALSE(s["as_expected"].get<bool>());
}

TEST(Script, PublicLogHidesSecrets)
{
  for (auto const *name : {"basic.json", "lite.json"})
  {
    auto r    = run_script(load(name), 7);
    auto keys = keys_in(r.public_log);
    for (auto const *secret : {"sk", "pk", "owner", "encrypted_key", "key"})
      EXPECT_EQ(keys.count(secret), 0u) << name << " leaks " << secret;
  }
}
