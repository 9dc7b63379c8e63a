// vbelab: command-line front end.
//
//   vbelab vbe compute   --scenario s.json [--entropy min] [--clustering toc|solo]
//   vbelab vbe estimate  --votes v.csv --balances b.csv [--entropy min]
//   vbelab transform apply --scenario s.json --transform t.json [--theorem N]
//   vbelab theorems check  --scenario s.json --transform t.json --theorem N
//   vbelab bribery scale|flip-cost|pivotal|qv ...
//   vbelab darkdao run script.json --seed N [--out dir]
//
// Exit status: 0 success, 1 bad input, 2 a checked claim failed.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "vbe/bribery.hpp"
#include "vbe/estimation.hpp"
#include "vbe/metrics.hpp"
#include "vbe/report.hpp"
#include "vbe/scenario_json.hpp"
#include "vbe/script.hpp"
#include "vbe/transforms.hpp"

namespace {

using vbe::json;

enum class LogLevel
{
  Quiet,
  Info,
  Debug
};

LogLevel log_level()
{
  char const *v = std::getenv("VBE_LOG");
  if (!v)
    return LogLevel::Quiet;
  std::string s(v);
  if (s == "debug" || s == "2")
    return LogLevel::Debug;
  if (s == "info" || s == "1")
    return LogLevel::Info;
  return LogLevel::Quiet;
}

void log(LogLevel at, std::string const &msg)
{
  if (log_level() >= at)
    std::cerr << (at == LogLevel::Debug ? "[debug] " : "[info] ") << msg << "\n";
}

std::string read_file(std::string const &path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw vbe::InputError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  log(LogLevel::Debug, "read " + path + " (" + std::to_string(ss.str().size()) + " bytes)");
  return ss.str();
}

json read_json(std::string const &path)
{
  try
  {
    return json::parse(read_file(path));
  }
  catch (json::parse_error const &e)
  {
    throw vbe::InputError(path + ": " + e.what());
  }
}

void write_file(std::string const &path, std::string const &data)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw vbe::InputError("cannot write '" + path + "'");
  out << data;
}

void emit(json const &report, std::string const &out_path)
{
  auto text = report.dump(2) + "\n";
  if (out_path.empty())
    std::cout << text;
  else
  {
    write_file(out_path, text);
    log(LogLevel::Info, "wrote " + out_path);
  }
}

vbe::EntropySpec entropy_flag(std::string const &s)
{
  auto f = vbe::parse_entropy(s);
  if (!f)
    throw vbe::InputError("unknown entropy '" + s + "'");
  return *f;
}

vbe::ClusteringSpec clustering_flag(std::string const &s, double eps)
{
  if (s == "toc" || s == "epsilon_toc")
    return vbe::ClusteringSpec::epsilon_toc(eps);
  if (s == "solo")
    return vbe::ClusteringSpec::solo();
  throw vbe::InputError("unknown clustering '" + s + "'");
}

bool outcome_flag(std::string const &s)
{
  if (s == "yes" || s == "true")
    return true;
  if (s == "no" || s == "false")
    return false;
  throw vbe::InputError("desired outcome must be yes or no, got '" + s + "'");
}

vbe::Scenario load_scenario(std::string const &path)
{
  auto s = vbe::scenario_from_json(read_json(path));
  vbe::require_valid(s);
  log(LogLevel::Info, path + ": " + std::to_string(s.num_players()) + " players, " +
                          std::to_string(s.num_elections()) + " elections");
  return s;
}

json scenario_summary(vbe::Scenario const &s, vbe::ClusteringSpec const &c, vbe::EntropySpec const &f)
{
  auto const tokens = s.token_vector();
  auto const ids    = s.ids();
  auto const p      = vbe::cluster(s, c);
  json       j;
  j["bits"]      = vbe::entropy(p, tokens, f, s.utilities);
  j["partition"] = vbe::partition_to_json(p, ids, tokens);
  j["gini"]      = vbe::gini(tokens);
  j["nakamoto"]  = vbe::nakamoto(tokens, s.q);
  return j;
}

struct Options
{
  std::string scenario, transform, theorem, votes, balances, script, out, instance;
  std::string entropy    = "min";
  std::string clustering = "toc";
  std::string desired    = "yes";
  std::string accept;
  std::string targets;
  double      utility     = 1.0;
  double      epsilon     = 0.01;
  double      whale       = 0.0;
  long long   accounts    = 0;
  int         n           = 3;
  std::uint64_t seed      = 0;
};

int cmd_compute(Options const &o)
{
  auto s = load_scenario(o.scenario);
  auto f = entropy_flag(o.entropy);
  auto c = clustering_flag(o.clustering, s.epsilon);
  json r;
  r["config"] = {{"command", "vbe compute"},
                 {"scenario", o.scenario},
                 {"entropy", o.entropy},
                 {"clustering", o.clustering},
                 {"epsilon", s.epsilon},
                 {"q", s.q}};
  auto sum = scenario_summary(s, c, f);
  for (auto it = sum.begin(); it != sum.end(); ++it)
    r[it.key()] = it.value();
  emit(r, o.out);
  return 0;
}

int cmd_estimate(Options const &o)
{
  auto f = entropy_flag(o.entropy);
  auto h = vbe::parse_history(read_file(o.votes), read_file(o.balances));
  auto e = vbe::estimate_vbe(h, f);
  json r;
  r["config"] = {{"command", "vbe estimate"}, {"votes", o.votes}, {"balances", o.balances}, {"entropy", o.entropy}};
  r["bits"]   = e.bits;
  r["partition"] = vbe::partition_to_json(e.partition, e.ordinal.voters, e.tokens);
  json rows      = json::object();
  for (std::size_t i = 0; i < e.ordinal.voters.size(); ++i)
  {
    json row = json::object();
    for (std::size_t k = 0; k < e.ordinal.elections.size(); ++k)
      row[e.ordinal.elections[k]] = e.ordinal.rows[i][k];
    rows[e.ordinal.voters[i]] = std::move(row);
  }
  r["ordinal_utilities"] = std::move(rows);
  emit(r, o.out);
  return 0;
}

vbe::TheoremId theorem_flag(std::string const &s)
{
  auto id = vbe::parse_theorem(s);
  if (!id)
    throw vbe::InputError("unknown theorem '" + s + "'");
  return *id;
}

int cmd_transform(Options const &o)
{
  auto s   = load_scenario(o.scenario);
  auto t   = vbe::transformation_from_json(read_json(o.transform));
  auto res = vbe::apply(s, t);
  json r;
  r["config"] = {{"command", "transform apply"},
                 {"scenario", o.scenario},
                 {"transform", vbe::transformation_to_json(t)},
                 {"theorem", o.theorem.empty() ? json(nullptr) : json(o.theorem)}};
  r["after"] = vbe::scenario_to_json(res.scenario);
  r["cost"]  = res.cost;
  json changed = json::array();
  for (auto i : res.changed)
    changed.push_back(res.scenario.players[i].id);
  r["changed"] = std::move(changed);
  r["master"]  = vbe::master_to_json(
      vbe::check_master_theorem(s, res.scenario, vbe::ClusteringSpec::epsilon_toc(s.epsilon)));
  int code = 0;
  if (!o.theorem.empty())
  {
    auto v       = vbe::check_theorem(s, t, theorem_flag(o.theorem));
    r["verdict"] = vbe::verdict_to_json(v);
    code         = v.failed() ? 2 : 0;
  }
  emit(r, o.out);
  return code;
}

int cmd_theorems(Options const &o)
{
  auto s = load_scenario(o.scenario);
  auto t = vbe::transformation_from_json(read_json(o.transform));
  auto v = vbe::check_theorem(s, t, theorem_flag(o.theorem));
  json r;
  r["config"]  = {{"command", "theorems check"},
                  {"scenario", o.scenario},
                  {"transform", vbe::transformation_to_json(t)},
                  {"theorem", o.theorem}};
  r["verdict"] = vbe::verdict_to_json(v);
  emit(r, o.out);
  log(LogLevel::Info, std::string("verdict: ") + (v.failed() ? "claim failed" : "ok"));
  return v.failed() ? 2 : 0;
}

int cmd_scale(Options const &o)
{
  auto s = load_scenario(o.scenario);
  auto c = clustering_flag(o.clustering, s.epsilon);
  json r;
  r["config"] = {{"command", "bribery scale"}, {"scenario", o.scenario}, {"clustering", o.clustering}, {"q", s.q}};
  r["scale"]  = vbe::scale_to_json(vbe::bribery_scale(s, c));
  emit(r, o.out);
  return 0;
}

int cmd_flip_cost(Options const &o)
{
  bool const d = outcome_flag(o.desired);
  json r;
  r["config"] = {{"command", "bribery flip-cost"}, {"utility", o.utility}, {"desired", o.desired}, {"epsilon", o.epsilon}};
  r["cost"]   = vbe::flip_cost(o.utility, d, o.epsilon);
  emit(r, o.out);
  return 0;
}

std::vector<bool> parse_accept(std::string const &s, int n)
{
  std::vector<bool> out;
  for (char c : s)
  {
    if (c == '1')
      out.push_back(true);
    else if (c == '0')
      out.push_back(false);
    else if (c != ',' && c != ' ')
      throw vbe::InputError("--accept: expected a string of 0 and 1");
  }
  if (out.size() != static_cast<std::size_t>(n))
    throw vbe::InputError("--accept: need exactly n flags");
  return out;
}

int cmd_pivotal(Options const &o)
{
  vbe::PivotalBribeGame g{o.n, o.utility, o.epsilon};
  g.validate();
  json r;
  r["config"] = {{"command", "bribery pivotal"}, {"n", o.n}, {"utility", o.utility}, {"epsilon", o.epsilon},
                 {"accept", o.accept.empty() ? json(nullptr) : json(o.accept)}};
  r["pivotal_payment"] = g.pivotal_payment();
  auto const profile   = o.accept.empty() ? std::vector<bool>(o.n, true) : parse_accept(o.accept, o.n);
  auto const out       = vbe::pivotal_bribe_evaluate(g, profile);
  r["outcome"]         = {{"outcome", out.outcome_yes ? "yes" : "no"},
                          {"no_votes", out.no_votes},
                          {"payments", out.payments},
                          {"payoffs", out.payoffs},
                          {"pivotal", out.pivotal},
                          {"briber_cost", out.briber_cost}};
  if (o.n <= 20)
  {
    auto d          = vbe::pivotal_dominance(g);
    r["dominance"] = {{"accepting_weakly_dominant", d.accepting_weakly_dominant},
                      {"minimum_margin", d.minimum_margin},
                      {"profiles_checked", d.profiles_checked}};
  }
  emit(r, o.out);
  return 0;
}

// {"scenario": {...}, "quadratic_utilities": {"p": {"e": u}}, "targets": [...], "desired": "yes"}
vbe::QvInstance qv_instance(json const &j, std::vector<std::size_t> &targets, bool &desired)
{
  vbe::detail::reject_unknown_keys(j, {"scenario", "quadratic_utilities", "targets", "desired"}, "qv instance");
  vbe::QvInstance q;
  q.linear = vbe::scenario_from_json(vbe::detail::require(j, "scenario", "qv instance"));
  vbe::require_valid(q.linear);
  q.quadratic_utilities = q.linear.utilities;
  if (j.contains("quadratic_utilities"))
  {
    auto const &qu = j["quadratic_utilities"];
    if (!qu.is_object())
      throw vbe::InputError("quadratic_utilities: expected an object");
    for (auto it = qu.begin(); it != qu.end(); ++it)
    {
      auto pi = q.linear.player_index(it.key());
      if (!pi)
        throw vbe::InputError("quadratic_utilities: unknown player '" + it.key() + "'");
      for (auto jt = it.value().begin(); jt != it.value().end(); ++jt)
      {
        auto ek = q.linear.election_index(jt.key());
        if (!ek)
          throw vbe::InputError("quadratic_utilities: unknown election '" + jt.key() + "'");
        q.quadratic_utilities[*pi][*ek] = vbe::detail::require_number(jt.value(), "quadratic utility");
      }
    }
  }
  auto qs = q.quadratic();
  vbe::require_valid(qs);
  if (j.contains("targets"))
    for (auto const &t : j["targets"])
    {
      auto pi = q.linear.player_index(vbe::detail::require_string(t, "targets[]"));
      if (!pi)
        throw vbe::InputError("targets: unknown player");
      targets.push_back(*pi);
    }
  desired = j.contains("desired") ? outcome_flag(vbe::detail::require_string(j["desired"], "desired")) : true;
  return q;
}

int cmd_qv(Options const &o)
{
  json r;
  r["config"] = {{"command", "bribery qv"},
                 {"instance", o.instance.empty() ? json(nullptr) : json(o.instance)},
                 {"whale_tokens", o.whale},
                 {"accounts", o.accounts}};
  if (o.instance.empty() && o.accounts == 0)
    throw vbe::InputError("bribery qv: give --instance or --tokens with --accounts");
  if (o.accounts != 0)
    r["sybil_amplification"] = vbe::quadratic_sybil_amplification(o.whale, o.accounts);
  if (!o.instance.empty())
  {
    std::vector<std::size_t> targets;
    bool                     desired = true;
    auto const               q       = qv_instance(read_json(o.instance), targets, desired);
    auto const               tokens  = q.linear.token_vector();
    json                     benefit = json::object();
    for (std::size_t i = 0; i < tokens.size(); ++i)
      benefit[q.linear.players[i].id] = vbe::qv_benefit(i, tokens);
    r["qv_benefit"] = std::move(benefit);
    json ub         = json::array();
    for (auto i : q.unchanged_beneficiaries())
      ub.push_back(q.linear.players[i].id);
    r["unchanged_beneficiaries"] = std::move(ub);
    if (!targets.empty())
    {
      auto c       = vbe::qv_compare(q, targets, desired);
      r["compare"] = {{"linear", {{"cost", c.linear.cost}, {"fraction", c.linear.fraction}}},
                      {"quadratic", {{"cost", c.quadratic.cost}, {"fraction", c.quadratic.fraction}}},
                      {"quadratic_gains", vbe::definitely_gt(c.quadratic.fraction, c.linear.fraction)}};
    }
    std::vector<std::size_t> all(tokens.size());
    for (std::size_t i = 0; i < all.size(); ++i)
      all[i] = i;
    auto budget = [](double b) { return std::isfinite(b) ? json(b) : json(nullptr); };
    r["budget_to_ensure"] = {
        {"linear", budget(vbe::divisible_budget_to_ensure(q.linear, all, desired, vbe::WeightingMode::Linear))},
        {"quadratic",
         budget(vbe::divisible_budget_to_ensure(q.quadratic(), all, desired, vbe::WeightingMode::Quadratic))}};
  }
  emit(r, o.out);
  return 0;
}

int cmd_darkdao(Options const &o)
{
  auto script = read_json(o.script);
  auto run    = vbe::run_script(script, o.seed);
  vbe::ojson r;
  r["config"] = {{"command", "darkdao run"}, {"script", o.script}, {"seed", o.seed}, {"out", o.out}};
  for (auto it = run.report.begin(); it != run.report.end(); ++it)
    r[it.key()] = it.value();
  if (!o.out.empty())
  {
    std::filesystem::create_directories(o.out);
    write_file(o.out + "/public.jsonl", vbe::detail::jsonl(run.public_log));
    write_file(o.out + "/confidential.jsonl", vbe::detail::jsonl(run.confidential_log));
    write_file(o.out + "/report.json", r.dump(2) + "\n");
    log(LogLevel::Info, "wrote logs to " + o.out);
  }
  std::cout << r.dump(2) << "\n";
  return run.mismatches > 0 ? 2 : 0;
}

}  // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Voting-bloc entropy and Dark DAO toolkit"};
  app.require_subcommand(1);
  Options o;
  int (*chosen)(Options const &) = nullptr;

  auto *vbe_cmd = app.add_subcommand("vbe", "Voting-bloc entropy")->require_subcommand(1);
  auto *compute = vbe_cmd->add_subcommand("compute", "VBE of a scenario");
  compute->add_option("--scenario", o.scenario)->required();
  compute->add_option("--entropy", o.entropy, "min|shannon|max|neg_sum_sq");
  compute->add_option("--clustering", o.clustering, "toc|solo");
  compute->add_option("--out", o.out);
  compute->callback([&] { chosen = cmd_compute; });

  auto *estimate = vbe_cmd->add_subcommand("estimate", "VBE estimated from vote history");
  estimate->add_option("--votes", o.votes)->required();
  estimate->add_option("--balances", o.balances)->required();
  estimate->add_option("--entropy", o.entropy, "min|shannon|max");
  estimate->add_option("--out", o.out);
  estimate->callback([&] { chosen = cmd_estimate; });

  auto *transform = app.add_subcommand("transform", "Transformations")->require_subcommand(1);
  auto *apply     = transform->add_subcommand("apply", "Apply a transformation");
  apply->add_option("--scenario", o.scenario)->required();
  apply->add_option("--transform", o.transform)->required();
  apply->add_option("--theorem", o.theorem);
  apply->add_option("--out", o.out);
  apply->callback([&] { chosen = cmd_transform; });

  auto *theorems = app.add_subcommand("theorems", "Theorem checks")->require_subcommand(1);
  auto *check    = theorems->add_subcommand("check", "Check a theorem on one instance");
  check->add_option("--scenario", o.scenario)->required();
  check->add_option("--transform", o.transform)->required();
  check->add_option("--theorem", o.theorem, "2|3|4|4c|5|6|7")->required();
  check->add_option("--out", o.out);
  check->callback([&] { chosen = cmd_theorems; });

  auto *bribery = app.add_subcommand("bribery", "Bribery calculators")->require_subcommand(1);
  auto *scale   = bribery->add_subcommand("scale", "Tokens and players needed to ensure an outcome");
  scale->add_option("--scenario", o.scenario)->required();
  scale->add_option("--clustering", o.clustering, "toc|solo");
  scale->add_option("--out", o.out);
  scale->callback([&] { chosen = cmd_scale; });

  auto *flip = bribery->add_subcommand("flip-cost", "Minimal bribe to flip one vote");
  flip->add_option("--utility", o.utility)->required();
  flip->add_option("--desired", o.desired, "yes|no");
  flip->add_option("--epsilon", o.epsilon);
  flip->add_option("--out", o.out);
  flip->callback([&] { chosen = cmd_flip_cost; });

  auto *pivotal = bribery->add_subcommand("pivotal", "Pivotal bribe game");
  pivotal->add_option("--n", o.n)->required();
  pivotal->add_option("--utility", o.utility);
  pivotal->add_option("--epsilon", o.epsilon);
  pivotal->add_option("--accept", o.accept, "acceptance profile, e.g. 110");
  pivotal->add_option("--out", o.out);
  pivotal->callback([&] { chosen = cmd_pivotal; });

  auto *qv = bribery->add_subcommand("qv", "Quadratic voting comparisons");
  qv->add_option("--instance", o.instance);
  qv->add_option("--tokens", o.whale, "whale balance for sybil amplification");
  qv->add_option("--accounts", o.accounts);
  qv->add_option("--out", o.out);
  qv->callback([&] { chosen = cmd_qv; });

  auto *darkdao = app.add_subcommand("darkdao", "Dark DAO simulation")->require_subcommand(1);
  auto *run     = darkdao->add_subcommand("run", "Run a protocol script");
  run->add_option("script", o.script)->required();
  run->add_option("--seed", o.seed);
  run->add_option("--out", o.out, "directory for public.jsonl, confidential.jsonl, report.json");
  run->callback([&] { chosen = cmd_darkdao; });

  try
  {
    app.parse(argc, argv);
  }
  catch (CLI::CallForHelp const &e)
  {
    return app.exit(e);
  }
  catch (CLI::CallForAllHelp const &e)
  {
    return app.exit(e);
  }
  catch (CLI::ParseError const &e)
  {
    app.exit(e);
    return 1;
  }

  try
  {
    return chosen(o);
  }
  catch (vbe::InputError const &e)
  {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  catch (vbe::ProtocolError const &e)
  {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
    return 1;
  }
  catch (std::exception const &e)
  {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
