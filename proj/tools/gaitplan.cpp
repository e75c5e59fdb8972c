#include <chrono>
#include <iostream>

#include <CLI11.hpp>

#include "gaitplan/io.hpp"
#include "gaitplan/protocol.hpp"

using namespace gaitplan;

namespace {

constexpr int kExitInfeasible = 2;

RobotModel load_model_or_default(const std::string& path) {
  if (path.empty()) return RobotModel{};
  return io::robot_model_from_json(io::parse(io::read_file(path), path));
}

struct EnvOptions {
  std::string map_path;
  std::string model_path;
  double goal_min = 0.0;
  double goal_max = std::numeric_limits<double>::infinity();
  int max_steps = 50;

  void add(CLI::App* app) {
    app->add_option("--map", map_path, "map file written by 'terrain gen'")->required()->check(CLI::ExistingFile);
    app->add_option("--model", model_path, "robot model file (built-in defaults when omitted)")->check(CLI::ExistingFile);
    app->add_option("--goal-min", goal_min, "minimum start-to-goal distance, m");
    app->add_option("--goal-max", goal_max, "maximum start-to-goal distance, m");
    app->add_option("--max-steps", max_steps, "phase cap per episode")->check(CLI::PositiveNumber);
  }

  EnvFactory factory() const {
    io::MapFile mf = io::load_map(io::read_file(map_path));
    if (!mf.spawn_region || !mf.goal_region)
      throw std::runtime_error(map_path + ": map file carries no spawn/goal regions");
    auto map = std::make_shared<const HeightMap>(std::move(mf.map));
    const RobotModel model = load_model_or_default(model_path);
    EnvConfig cfg;
    cfg.goal_min_distance = goal_min;
    cfg.goal_max_distance = goal_max;
    cfg.max_episode_length = max_steps;
    const EnvRegions regions{mf.terrain_id, *mf.spawn_region, *mf.goal_region};
    return [=] { return GaitPlannerEnv(map, model, regions, cfg); };
  }
};

struct PlannerOptions {
  ShootingConfig cfg = tuned_shooting_config();

  void add(CLI::App* app) {
    app->add_option("--candidates", cfg.n_candidates, "candidate actions per decision");
    app->add_option("--horizon", cfg.horizon, "lookahead steps");
    app->add_option("--rollouts", cfg.n_rollouts, "continuations averaged per candidate");
    app->add_option("--stance-bias", cfg.stance_bias, "probability of full-stance proposals");
    app->add_option("--threads", cfg.n_threads, "worker threads for candidate evaluation");
    app->add_flag_function(
        "--uniform-proposals", [this](std::int64_t) { cfg.proposal = ProposalBox{}; },
        "propose over the whole clipped action box");
  }
};

int cmd_terrain_gen(const std::string& scenario_path, const std::string& out, const std::string& pgm) {
  const TerrainScenario sc = io::scenario_from_json(io::parse(io::read_file(scenario_path), scenario_path));
  io::MapFile mf;
  mf.map = generate(sc);
  mf.terrain_id = to_string(sc.kind) + std::string("-") + std::to_string(sc.seed);
  mf.spawn_region = sc.spawn_region;
  mf.goal_region = sc.goal_region;
  io::write_file(out, io::save_map(mf));
  if (!pgm.empty()) {
    auto [image, sidecar] = io::export_pgm(mf.map);
    io::write_file(pgm, image);
    io::write_file(pgm + ".json", sidecar.dump(1) + "\n");
  }
  std::cout << "wrote " << out << " (" << mf.map.n_rows() << "x" << mf.map.n_cols() << " cells)\n";
  return 0;
}

int cmd_feascheck(const std::string& from, const std::string& to, const std::string& model_path, int samples) {
  const SupportPhase a = io::load_phase(io::read_file(from));
  const SupportPhase b = io::load_phase(io::read_file(to));
  validate_phase(a);
  validate_phase(b);
  FeasibilityOptions opt;
  opt.n_samples = samples;
  const bool ok = transition_feasible(a, b, load_model_or_default(model_path), opt);
  std::cout << (ok ? "feasible" : "infeasible") << "\n";
  return ok ? 0 : kExitInfeasible;
}

int cmd_plan(const EnvOptions& eo, const PlannerOptions& po, std::uint64_t seed, const std::string& out,
             const std::string& log_path) {
  GaitPlannerEnv env = eo.factory()();
  env.reset(seed);
  ShootingConfig cfg = po.cfg;
  cfg.seed = seed;
  const PlanResult r = plan_to_goal(env, cfg, eo.max_steps, seed);
  io::write_file(out, io::save_plan(r.plan));
  if (!log_path.empty()) io::write_file(log_path, io::save_episode_log(r.log));
  const auto& last = r.log.records.back();
  std::cout << (r.log.success() ? "success" : "no success") << " after " << r.log.records.size()
            << " steps, last reason " << to_string(last.reason) << "\n";
  return 0;
}

int cmd_eval_esr(const EnvOptions& eo, const PlannerOptions& po, int episodes, std::uint64_t seed, int threads,
                 const std::string& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const EsrReport rep = evaluate_esr(eo.factory(), po.cfg, episodes, seed, threads,
                                     [](int i, const PlanResult& r) {
                                       std::cerr << "episode " << i << ": " << (r.log.success() ? "success" : "fail")
                                                 << " in " << r.log.records.size() << " steps\n";
                                     });
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  Json j = io::to_json(rep);
  j["wall_time_s"] = secs;
  io::write_file(out, j.dump(1) + "\n");
  std::cout << "ESR " << rep.esr << " (" << rep.successes << "/" << rep.n_episodes << "), mean steps "
            << rep.mean_steps << ", " << secs << " s\n";
  return 0;
}

int cmd_metrics(const std::string& which, const std::string& log_path) {
  const TrackingLog log = io::load_tracking_log(io::read_file(log_path));
  if (which == "fter") {
    std::cout << compute_fter(log) << "\n";
  } else {
    std::cout << compute_fts(log.touchdowns) << "\n";
  }
  return 0;
}

int cmd_serve(const EnvOptions& eo, bool stdio, const std::string& tcp) {
  const EnvFactory make = eo.factory();
  if (stdio) {
    serve_stream(std::cin, std::cout, make);
    return 0;
  }
  const auto colon = tcp.rfind(':');
  if (colon == std::string::npos) throw std::runtime_error("--tcp expects host:port");
  TcpServer server(tcp.substr(0, colon), std::stoi(tcp.substr(colon + 1)));
  std::cerr << "listening on port " << server.port() << "\n";
  server.run(make);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gait-planning toolkit: terrain, transition feasibility, planning and evaluation"};
  app.require_subcommand(1);

  auto* terrain = app.add_subcommand("terrain", "terrain tools");
  terrain->require_subcommand(1);
  auto* gen = terrain->add_subcommand("gen", "generate a height map from a scenario spec");
  std::string scenario, map_out, pgm;
  gen->add_option("--scenario", scenario)->required()->check(CLI::ExistingFile);
  gen->add_option("--out", map_out)->required();
  gen->add_option("--pgm", pgm, "also write a 16-bit PGM with a JSON sidecar");

  auto* feas = app.add_subcommand("feascheck", "transition feasibility between two phases (exit 2 = infeasible)");
  std::string from, to, feas_model;
  int samples = 8;
  feas->add_option("--from", from)->required()->check(CLI::ExistingFile);
  feas->add_option("--to", to)->required()->check(CLI::ExistingFile);
  feas->add_option("--model", feas_model)->check(CLI::ExistingFile);
  feas->add_option("--samples", samples, "time samples K")->check(CLI::Range(2, 1000));

  auto* plan = app.add_subcommand("plan", "plan one episode with the shooting planner");
  EnvOptions plan_env;
  PlannerOptions plan_po;
  std::uint64_t plan_seed = 0;
  std::string plan_out, plan_log;
  plan_env.add(plan);
  plan_po.add(plan);
  plan->add_option("--seed", plan_seed)->required();
  plan->add_option("--out", plan_out)->required();
  plan->add_option("--log", plan_log, "episode log, JSON lines");

  auto* eval = app.add_subcommand("eval", "evaluation runs");
  eval->require_subcommand(1);
  auto* esr = eval->add_subcommand("esr", "episodic success rate of the shooting planner");
  EnvOptions esr_env;
  PlannerOptions esr_po;
  int episodes = 50, threads = 1;
  std::uint64_t esr_seed = 0;
  std::string esr_out;
  esr_env.add(esr);
  esr_po.add(esr);
  esr->add_option("--episodes", episodes)->check(CLI::PositiveNumber);
  esr->add_option("--seed", esr_seed, "master seed");
  esr->add_option("--episode-threads", threads, "episodes run in parallel");
  esr->add_option("--out", esr_out)->required();

  auto* metrics = app.add_subcommand("metrics", "foothold tracking metrics over a tracking log");
  metrics->require_subcommand(1);
  std::string tracking;
  for (const char* name : {"fter", "fts"}) {
    auto* sub = metrics->add_subcommand(name, name == std::string("fter") ? "foothold tracking error rate, m"
                                                                          : "foothold tracking score");
    sub->add_option("--log", tracking)->required()->check(CLI::ExistingFile);
  }

  auto* serve = app.add_subcommand("serve", "serve the environment over line-delimited JSON");
  EnvOptions serve_env;
  bool stdio = false;
  std::string tcp;
  serve_env.add(serve);
  auto* o_stdio = serve->add_flag("--stdio", stdio, "one session on stdin/stdout");
  auto* o_tcp = serve->add_option("--tcp", tcp, "listen on host:port, one session per connection");
  o_stdio->excludes(o_tcp);
  serve->callback([&] {
    if (!stdio && tcp.empty()) throw CLI::ValidationError("serve", "pass --stdio or --tcp host:port");
  });

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_terrain_gen(scenario, map_out, pgm);
    if (feas->parsed()) return cmd_feascheck(from, to, feas_model, samples);
    if (plan->parsed()) return cmd_plan(plan_env, plan_po, plan_seed, plan_out, plan_log);
    if (esr->parsed()) return cmd_eval_esr(esr_env, esr_po, episodes, esr_seed, threads, esr_out);
    for (const auto* sub : metrics->get_subcommands())
      if (sub->parsed()) return cmd_metrics(sub->get_name(), tracking);
    if (serve->parsed()) return cmd_serve(serve_env, stdio, tcp);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
