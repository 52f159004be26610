// mcfault: run serial/parallel Poisson-clock experiments and report whether
// the random source behaves.
//
//   mcfault <calibrate|detect|ab-test|fix-demo> --config FILE [--out DIR] [--seed-override U64]
//
// Exit codes: 0 consistent, 1 usage or configuration error, 2 statistical
// divergence, 3 determinism breach.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "mcfault/commands.hpp"
#include "mcfault/config.hpp"
#include "mcfault/report.hpp"

namespace fs = std::filesystem;
using namespace mcfault;

namespace {

std::string file_label(const std::string& label) {
  std::string out = label;
  for (char& c : out) {
    if (c == '/' || c == '=') c = '_';
  }
  return out;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << content;
  if (!os) throw std::runtime_error("write failed for " + path.string());
}

int run(cli::Command cmd, const std::string& config_path, const std::string& out_override,
        const std::optional<std::uint64_t>& seed_override) {
  std::ifstream in(config_path);
  if (!in) throw ConfigError("--config: cannot open '" + config_path + "'");
  AppConfig cfg = parse_config(in);
  if (seed_override) cfg.plan.seeds = {Seed{*seed_override}};
  if (!out_override.empty()) cfg.output.directory = out_override;

  const fs::path out_dir = cfg.output.directory;
  fs::create_directories(out_dir);

  TrajectoryObserver observe;
  if (cfg.output.events_csv) {
    observe = [&out_dir](Seed seed, const std::string& label, const Trajectory& t) {
      std::ostringstream os;
      report::write_events_csv(os, t);
      write_file(out_dir / ("events_" + std::to_string(seed.value) + "_" + file_label(label) + ".csv"), os.str());
    };
  }

  cli::CommandResult res = cli::run_command(cmd, cfg, observe);
  for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";

  if (cfg.output.json) {
    report::json body = res.body;
    body[report::kTimestampField] = report::utc_timestamp();
    write_file(out_dir / "report.json", body.dump(2) + "\n");
  }
  if (cfg.output.summary_csv) {
    std::ostringstream os;
    report::write_summary_csv(os, res.rows);
    write_file(out_dir / "summary.csv", os.str());
  }

  std::size_t diverged = 0;
  for (const auto& r : res.rows) {
    if (r.verdict == "divergence" && r.p_value && *r.p_value < cfg.plan.alpha) ++diverged;
  }
  std::cout << cli::command_name(cmd) << ": " << res.rows.size() << " rows, " << diverged
            << " below alpha; exit " << res.exit_code << " (" << out_dir.string() << ")\n";
  return res.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Serial vs parallel Monte Carlo clock comparison and RNG fault detection"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed_override;

  struct Sub {
    cli::Command cmd;
    CLI::App* app;
  };
  std::vector<Sub> subs;
  for (auto cmd : {cli::Command::Calibrate, cli::Command::Detect, cli::Command::AbTest, cli::Command::FixDemo}) {
    auto* sub = app.add_subcommand(std::string(cli::command_name(cmd)));
    sub->add_option("--config", config_path, "INI experiment configuration")->required();
    sub->add_option("--out", out_dir, "output directory (overrides [output] directory)");
    sub->add_option("--seed-override", seed_override, "run a single seed instead of the configured list");
    subs.push_back({cmd, sub});
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return cli::kExitUsage;
  }

  try {
    for (const auto& s : subs) {
      if (s.app->parsed()) return run(s.cmd, config_path, out_dir, seed_override);
    }
    return cli::kExitUsage;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
  } catch (...) {
    std::cerr << "error: unknown failure\n";
  }
  return cli::kExitUsage;
}
