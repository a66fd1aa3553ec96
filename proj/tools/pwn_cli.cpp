// pwn: analyze, cross-check, simulate and benchmark probabilistic workflow
// nets. One JSON result object per analysis on stdout; exit 0 on a delivered
// sound/unsound verdict, 1 on analysis errors, 2 on usage errors.

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "pwn/bench.hpp"
#include "pwn/format.hpp"
#include "pwn/mdp.hpp"
#include "pwn/pnml.hpp"
#include "pwn/rational.hpp"
#include "pwn/reduction.hpp"
#include "pwn/result.hpp"
#include "pwn/simulate.hpp"

namespace {

double ms_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
      .count();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw pwn::error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string stem_of(const std::string& path) {
  std::size_t slash = path.find_last_of("/\\");
  std::string name = slash == std::string::npos ? path : path.substr(slash + 1);
  std::size_t dot = name.find_last_of('.');
  return dot == std::string::npos ? name : name.substr(0, dot);
}

bool is_pnml(const std::string& path) {
  return path.size() > 5 && (path.ends_with(".pnml") || path.ends_with(".xml"));
}

pwn::workflow_net load_net(const std::string& path) {
  std::string text = read_file(path);
  return is_pnml(path) ? pwn::import_pnml(text) : pwn::parse_native(text);
}

pwn::scheduler scheduler_by_name(const std::string& name) {
  if (name == "min-id") return pwn::min_id_scheduler();
  if (name == "max-id") return pwn::max_id_scheduler();
  throw pwn::error("unknown scheduler " + name + " (expected min-id or max-id)");
}

pwn::oracle_fields run_oracle(const pwn::workflow_net& net, std::size_t cap, bool minmax) {
  pwn::oracle_fields o;
  pwn::mdp_model model = pwn::build_mdp(net, {.state_cap = cap});
  o.states = model.state_count();
  o.sound = pwn::check_soundness_explicit(net, {.state_cap = cap});
  for (const pwn::scheduler& s : {pwn::min_id_scheduler(), pwn::max_id_scheduler()}) {
    pwn::solve_result r = pwn::expected_reward_under(model, net, s);
    o.exact = o.exact && r.exact;
    o.per_scheduler.emplace_back(s.name, r.value.str());
  }
  if (minmax) {
    pwn::minmax_result mm = pwn::expected_reward_minmax(model);
    o.expected_min = mm.min_value.str();
    o.expected_max = mm.max_value.str();
    o.exact = o.exact && mm.exact;
  }
  return o;
}

int analyze_one(const std::string& file, bool with_oracle, const std::string& trace_path,
                std::size_t cap) {
  pwn::workflow_net net = load_net(file);
  pwn::analysis_result result;
  result.net = stem_of(file);
  pwn::reduction_outcome outcome;
  auto start = std::chrono::steady_clock::now();
  try {
    outcome = pwn::reduce(net);
  } catch (const pwn::not_free_choice&) {
    result.verdict = "not_free_choice";
    std::cout << pwn::to_json(result) << "\n";
    return 1;
  }
  result.reduce_ms = ms_since(start);
  result.merge_count = outcome.merge_count;
  result.iteration_count = outcome.iteration_count;
  result.shortcut_count = outcome.shortcut_count;
  switch (outcome.verdict) {
    case pwn::reduction_outcome::kind::sound:
      result.verdict = "sound";
      result.expected_reward = outcome.expected;
      break;
    case pwn::reduction_outcome::kind::unsound:
      result.verdict = "unsound";
      break;
    case pwn::reduction_outcome::kind::inconclusive:
      result.verdict = "inconclusive";
      break;
  }
  if (!trace_path.empty()) {
    std::ofstream out(trace_path);
    if (!out) throw pwn::error("cannot write " + trace_path);
    out << pwn::render_trace(outcome.trace);
  }
  if (with_oracle) {
    auto ostart = std::chrono::steady_clock::now();
    result.oracle = run_oracle(net, cap, true);
    result.oracle_ms = ms_since(ostart);
    if (result.verdict == "sound") {
      std::string reduced = pwn::to_string(outcome.expected);
      result.agrees = result.oracle->sound && result.oracle->expected_min == reduced &&
                      result.oracle->expected_max == reduced;
    } else if (result.verdict == "unsound") {
      result.agrees = !result.oracle->sound && result.oracle->expected_min == "inf";
    }
  }
  std::cout << pwn::to_json(result) << "\n";
  if (result.verdict == "inconclusive") return 1;
  return 0;
}

// batch mode: one result line per file, worst exit code wins
int cmd_analyze(const std::vector<std::string>& files, bool with_oracle,
                const std::string& trace_path, std::size_t cap) {
  int rc = 0;
  for (const std::string& file : files) rc = std::max(rc, analyze_one(file, with_oracle, trace_path, cap));
  return rc;
}

int cmd_oracle(const std::string& file, const std::string& sched_name, bool minmax,
               std::size_t cap, const std::string& dump_path) {
  pwn::workflow_net net = load_net(file);
  pwn::mdp_model model;
  try {
    model = pwn::build_mdp(net, {.state_cap = cap});
  } catch (const pwn::confusion_detected& e) {
    pwn::analysis_result result;
    result.net = stem_of(file);
    result.verdict = "inconclusive";
    result.oracle = pwn::oracle_fields{};
    result.oracle->confusion_free = false;
    std::cout << pwn::to_json(result) << "\n";
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  if (!dump_path.empty()) {
    std::ofstream out(dump_path);
    if (!out) throw pwn::error("cannot write " + dump_path);
    pwn::dump_mdp(model, net, out);
  }
  pwn::analysis_result result;
  result.net = stem_of(file);
  auto start = std::chrono::steady_clock::now();
  pwn::oracle_fields o;
  o.states = model.state_count();
  o.sound = pwn::check_soundness_explicit(net, {.state_cap = cap});
  pwn::scheduler sched = scheduler_by_name(sched_name);
  pwn::solve_result chain = pwn::expected_reward_under(model, net, sched);
  o.per_scheduler.emplace_back(sched.name, chain.value.str());
  o.exact = chain.exact;
  if (minmax) {
    pwn::minmax_result mm = pwn::expected_reward_minmax(model);
    o.expected_min = mm.min_value.str();
    o.expected_max = mm.max_value.str();
    o.exact = o.exact && mm.exact;
  }
  result.oracle_ms = ms_since(start);
  result.verdict = o.sound ? "sound" : "unsound";
  if (o.sound && chain.value.is_finite()) result.expected_reward = chain.value.value();
  result.oracle = std::move(o);
  std::cout << pwn::to_json(result) << "\n";
  return 0;
}

int cmd_simulate(const std::string& file, std::uint64_t runs, std::uint64_t seed,
                 const std::string& sched_name, std::uint64_t step_bound) {
  pwn::workflow_net net = load_net(file);
  pwn::simulation_result sim = pwn::simulate(
      net, scheduler_by_name(sched_name), {.runs = runs, .seed = seed, .step_bound = step_bound});
  nlohmann::json j;
  j["net"] = stem_of(file);
  j["runs"] = sim.runs;
  j["mean"] = pwn::to_string(sim.mean);
  j["variance"] = pwn::to_string(sim.variance);
  j["mean_double"] = pwn::rational(sim.mean).get_d();
  nlohmann::json first;
  for (const auto& [prefix, count] : sim.prefix_counts) {
    if (prefix.size() != 1) continue;
    first[net.name(prefix[0])] = static_cast<double>(count) / sim.runs;
  }
  j["first_transition_frequency"] = std::move(first);
  std::cout << j << "\n";
  return 0;
}

int cmd_bench(const pwn::bench_options& opt, const std::string& csv_path) {
  std::vector<pwn::bench_row> rows = pwn::run_bench(opt);
  if (csv_path.empty()) {
    pwn::write_csv(rows, std::cout);
  } else {
    std::ofstream out(csv_path);
    if (!out) throw pwn::error("cannot write " + csv_path);
    pwn::write_csv(rows, out);
    std::cerr << "wrote " << rows.size() << " rows to " << csv_path << "\n";
  }
  return 0;
}

int cmd_generate(const std::string& spec_text, const std::string& out_path) {
  pwn::bench_spec spec = pwn::parse_bench_spec(spec_text);
  pwn::workflow_net net = pwn::generate_parallel_bench(spec);
  std::string doc = pwn::render_native(net);
  if (out_path.empty()) {
    std::cout << doc;
  } else {
    std::ofstream out(out_path);
    if (!out) throw pwn::error("cannot write " + out_path);
    out << doc;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"analysis of probabilistic workflow nets"};
  app.require_subcommand(1);

  std::vector<std::string> analyze_files;
  std::string file, trace_path, sched_name = "min-id", dump_path, csv_path, spec_text, out_path;
  bool with_oracle = false, minmax = false;
  std::size_t cap = 1'000'000;
  std::uint64_t runs = 100'000, seed = 0, step_bound = 1'000'000;
  pwn::bench_options bench_opt;

  auto* analyze = app.add_subcommand("analyze", "reduce nets and report their expected rewards");
  analyze->add_option("files", analyze_files, "net files (.pwn native, .pnml/.xml import)")
      ->required()
      ->expected(-1);
  analyze->add_flag("--oracle", with_oracle, "cross-check against the explicit-state oracle");
  analyze->add_option("--trace", trace_path, "write the rule application trace to this path");
  analyze->add_option("--cap", cap, "oracle state cap");

  auto* oracle = app.add_subcommand("oracle", "explicit-state analysis");
  oracle->add_option("file", file)->required();
  oracle->add_option("--scheduler", sched_name, "min-id or max-id");
  oracle->add_flag("--minmax", minmax, "optimize over all schedulers");
  oracle->add_option("--cap", cap, "state cap");
  oracle->add_option("--dump", dump_path, "write the state/distribution dump to this path");

  auto* sim = app.add_subcommand("simulate", "Monte-Carlo estimate of the expected reward");
  sim->add_option("file", file)->required();
  sim->add_option("--runs", runs, "number of trajectories")->required();
  sim->add_option("--seed", seed, "RNG seed")->required();
  sim->add_option("--scheduler", sched_name, "min-id or max-id");
  sim->add_option("--step-bound", step_bound, "abort a trajectory after this many steps");

  auto* bench = app.add_subcommand("bench", "scaling ladder over the parallel benchmark family");
  bench->add_option("--max-n", bench_opt.max_n, "largest process count")->required();
  bench->add_option("--repeat", bench_opt.repeat, "timing repetitions per point");
  bench->add_option("--csv", csv_path, "write rows to this file instead of stdout");
  bench->add_option("--seed", bench_opt.seed, "parameter seed");
  bench->add_option("--cap", bench_opt.state_cap, "oracle state cap");
  bench->add_option("--timeout", bench_opt.timeout_seconds, "per-engine soft timeout (seconds)");
  bench->add_option("--runs", bench_opt.simulate_runs, "simulation trajectories per point");

  auto* generate = app.add_subcommand("generate", "emit a benchmark net in the native format");
  generate->add_option("--bench", spec_text,
                       "spec: n=<k>,p=<p/q[;...]>,r=<p/q[;...]>[,fork=..][,join=..] "
                       "or n=<k>,random,seed=<s>")
      ->required();
  generate->add_option("-o,--output", out_path, "output file (stdout if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (app.got_subcommand(analyze)) return cmd_analyze(analyze_files, with_oracle, trace_path, cap);
    if (app.got_subcommand(oracle)) return cmd_oracle(file, sched_name, minmax, cap, dump_path);
    if (app.got_subcommand(sim)) return cmd_simulate(file, runs, seed, sched_name, step_bound);
    if (app.got_subcommand(bench)) return cmd_bench(bench_opt, csv_path);
    if (app.got_subcommand(generate)) return cmd_generate(spec_text, out_path);
  } catch (const pwn::syntax_error& e) {
    std::cerr << "error: " << file << ": " << e.what() << "\n";
    return 1;
  } catch (const pwn::error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
