// mevolve: run, inspect and certify monotone-iteration scenarios from JSON configs.
#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "mevolve/report.hpp"

namespace fs = std::filesystem;
using namespace mevolve;

namespace {

enum Exit { kOk = 0, kInvalid = 1, kFlagged = 2 };

std::mutex io_mutex;

void say(std::ostream& os, const std::string& line) {
  std::lock_guard<std::mutex> lock(io_mutex);
  os << line << '\n';
}

int do_run(const fs::path& cfg_path, const std::optional<fs::path>& out) {
  const RunConfig cfg = load_config(cfg_path.string());
  const fs::path dir = out ? *out : fs::path(cfg.output);
  const RunResult result = run_config(cfg);
  write_outputs(result, cfg, dir);
  std::ostringstream os;
  os << cfg_path.filename().string() << ": " << (result.flags.empty() ? "ok" : "flagged")
     << "  iters=" << result.iteration.n_iters
     << "  u_star in [" << result.equilibria.u_star.min() << ", " << result.equilibria.u_star.max()
     << "]  u^star in [" << result.equilibria.u_upper_star.min() << ", "
     << result.equilibria.u_upper_star.max() << "]";
  for (const auto& f : result.flags) os << "  !" << f;
  say(std::cout, os.str());
  return result.exit_code();
}

int do_eig(const fs::path& cfg_path, const std::optional<fs::path>& out) {
  const RunConfig cfg = load_config(cfg_path.string());
  const auto j = eig_config(cfg);
  std::ostringstream os;
  os.precision(12);
  for (const auto& t : j["operators"]) {
    os << "lambda1(" << t["operator"].get<std::string>() << ") = " << t["lambda1"].get<double>()
       << "   residual " << t["residual"].get<double>() << '\n';
  }
  if (j.contains("x")) {
    os << "node  x  phi0\n";
    const auto& phi = j["operators"][0]["phi0"];
    for (std::size_t i = 0; i < phi.size(); ++i) {
      os << i << "  " << j["x"][i].get<double>() << "  " << phi[i].get<double>() << '\n';
    }
  }
  say(std::cout, os.str());
  if (out) {
    fs::create_directories(*out);
    std::ofstream(*out / "eig.json") << j.dump(2) << '\n';
  }
  return kOk;
}

int do_verify(const fs::path& cfg_path, const std::optional<fs::path>& out) {
  const RunConfig cfg = load_config(cfg_path.string());
  const VerifyResult v = verify_config(cfg);
  std::ostringstream os;
  os << cfg_path.filename().string() << ": certificates " << (v.passed ? "pass" : "FAIL");
  const auto& r = v.report;
  const auto certs = r.contains("scenario") ? r["scenario"]["certificates"] : r["certificates"];
  os << "  sub margin " << certs["sub"]["worst_margin"].dump() << "  super margin "
     << certs["super"]["worst_margin"].dump();
  if (r.contains("error")) os << "\n  " << r["error"].get<std::string>();
  say(std::cout, os.str());
  if (out) {
    fs::create_directories(*out);
    std::ofstream(*out / "verify.json") << r.dump(2) << '\n';
  }
  return v.passed ? kOk : kInvalid;
}

using Command = int (*)(const fs::path&, const std::optional<fs::path>&);

int guarded(Command cmd, const fs::path& cfg, const std::optional<fs::path>& out) {
  try {
    return cmd(cfg, out);
  } catch (const NumericalError& e) {
    say(std::cerr, cfg.string() + ": numerical failure: " + e.what() +
                       " (value " + std::to_string(e.value()) + ")");
    return kFlagged;
  } catch (const std::exception& e) {
    say(std::cerr, cfg.string() + ": error: " + e.what());
    return kInvalid;
  }
}

// A directory runs every *.json inside it, each into its own output folder.
int dispatch(Command cmd, const fs::path& target, const std::optional<fs::path>& out,
             unsigned jobs) {
  if (!fs::is_directory(target)) return guarded(cmd, target, out);
  std::vector<fs::path> configs;
  for (const auto& e : fs::directory_iterator(target)) {
    if (e.is_regular_file() && e.path().extension() == ".json") configs.push_back(e.path());
  }
  std::sort(configs.begin(), configs.end());
  if (configs.empty()) {
    say(std::cerr, target.string() + ": no .json configs");
    return kInvalid;
  }
  const fs::path base = out ? *out : fs::path("out");
  std::vector<int> codes(configs.size(), kOk);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < configs.size(); i = next++) {
      codes[i] = guarded(cmd, configs[i], base / configs[i].stem());
    }
  };
  std::vector<std::thread> pool;
  const unsigned n = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(configs.size())));
  for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (std::count(codes.begin(), codes.end(), kInvalid)) return kInvalid;
  if (std::count(codes.begin(), codes.end(), kFlagged)) return kFlagged;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monotone iteration for semilinear evolution equations"};
  app.require_subcommand(1);
  std::string out_dir;
  unsigned jobs = 1;
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--jobs", jobs, "Configs to process concurrently when given a directory")
      ->check(CLI::PositiveNumber);

  std::string cfg;
  Command chosen = nullptr;
  struct Sub {
    const char* name;
    const char* help;
    Command cmd;
  };
  const Sub subs[] = {
      {"run", "Build the scenario, run the engine and write report and trajectories", do_run},
      {"eig", "Print principal eigenvalues and eigenvectors of the configured operators", do_eig},
      {"verify", "Check sub/super-solution and admissibility certificates only", do_verify},
  };
  for (const auto& s : subs) {
    auto* sc = app.add_subcommand(s.name, s.help);
    sc->add_option("config", cfg, "JSON config file or directory of configs")->required();
    sc->add_option("--out", out_dir, "Output directory");
    sc->add_option("--jobs", jobs, "Configs to process concurrently")->check(CLI::PositiveNumber);
    const Command cmd = s.cmd;
    sc->callback([&chosen, cmd] { chosen = cmd; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalid;
  }
  const std::optional<fs::path> out =
      out_dir.empty() ? std::nullopt : std::optional<fs::path>(out_dir);
  return dispatch(chosen, cfg, out, jobs);
}
