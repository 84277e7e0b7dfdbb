#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "rspca/rspca.hpp"

namespace {

extern "C" void on_signal(int) { rspca::request_stop(); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Resampling sensitivity experiments for principal components"};
  app.require_subcommand(1, 1);

  std::string config_path;
  rspca::RunOptions opts;
  std::string out_dir;
  unsigned threads = 0;
  std::uint64_t seed = 0;

  for (const auto& name : rspca::known_commands()) {
    auto* sub = app.add_subcommand(name, "run the '" + name + "' study");
    sub->add_option("--config", config_path, "configuration file")->required();
    sub->add_option("--out", out_dir, "output directory (overrides output.dir)");
    sub->add_option("--threads", threads, "worker threads, 0 for all cores (overrides output.threads)");
    sub->add_option("--seed", seed, "base seed (overrides ensemble.seed)");
    sub->add_flag("--resume", opts.resume, "continue an interrupted sweep from its checkpoint");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "{\"status\":\"error\",\"exit_code\":2,\"kind\":\"usage\",\"message\":"
              << nlohmann::json(e.what()).dump() << "}\n";
    return rspca::kExitConfig;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  auto* sub = app.get_subcommands().front();
  if (sub->count("--out") > 0) opts.out_dir = out_dir;
  if (sub->count("--threads") > 0) opts.threads = threads;
  if (sub->count("--seed") > 0) opts.seed = seed;

  std::ifstream in(config_path, std::ios::binary);
  if (!in) {
    std::cerr << "{\"status\":\"error\",\"exit_code\":2,\"kind\":\"config\",\"message\":"
              << nlohmann::json("cannot open config file '" + config_path + "'").dump() << "}\n";
    return rspca::kExitConfig;
  }
  std::ostringstream text;
  text << in.rdbuf();

  rspca::RunConfig cfg;
  try {
    cfg = rspca::parse_config(text.str());
  } catch (const rspca::ConfigError& e) {
    std::cerr << rspca::detail::error_record(e, rspca::kExitConfig) << "\n";
    return rspca::kExitConfig;
  }
  if (cfg.command != command) {
    const rspca::ConfigError e("config is for command '" + cfg.command + "' but '" + command + "' was requested");
    std::cerr << rspca::detail::error_record(e, rspca::kExitConfig) << "\n";
    return rspca::kExitConfig;
  }

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  return rspca::run_command(std::move(cfg), opts, std::cout, std::cerr);
}
