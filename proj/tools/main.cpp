#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "scenario.hpp"

namespace sc = apseq::scenario;

namespace {

apseq::Window parse_window(const std::string& text) {
  const auto colon = text.find(':', 1);
  if (colon == std::string::npos) throw apseq::InputContractError("--window expects A:B, got '" + text + "'");
  try {
    const apseq::Window w{std::stol(text.substr(0, colon)), std::stol(text.substr(colon + 1))};
    if (!w.valid()) throw apseq::InputContractError("--window start exceeds end: '" + text + "'");
    return w;
  } catch (const std::logic_error&) {
    throw apseq::InputContractError("--window expects integers A:B, got '" + text + "'");
  }
}

struct Common {
  std::string config;
  std::string out = ".";
  std::string window;
  double tol = 0.0;
  unsigned threads = 0;
};

void add_common(CLI::App* cmd, Common& c, bool needs_config) {
  auto* opt = cmd->add_option("--config", c.config, "scenario JSON file");
  if (needs_config) opt->required();
  cmd->add_option("--out", c.out, "output directory")->capture_default_str();
  cmd->add_option("--tol", c.tol, "override the solver tolerance");
  cmd->add_option("--window", c.window, "override the solve window, A:B");
  cmd->add_option("--threads", c.threads, "worker threads (default: APSEQ_THREADS or 1)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"apseq: almost periodic solutions of abstract difference equations"};
  app.require_subcommand(1);

  Common common;
  std::string input_csv;
  const char* solver_commands[] = {"solve", "solve-inclusion", "solve-degenerate", "solve-p2", "reduce-order", "analyze"};
  const char* help[] = {"solve any scenario", "first-order inclusion via a resolvent selection",
                        "degenerate equations (vb / vb1 / block systems / heat)", "second-order equations (p = 2, wave)",
                        "companion / block reduction without solving", "almost periodicity analysis of a sequence"};
  for (std::size_t i = 0; i < std::size(solver_commands); ++i) {
    auto* cmd = app.add_subcommand(solver_commands[i], help[i]);
    add_common(cmd, common, true);
    if (std::string(solver_commands[i]) == "analyze") {
      cmd->add_option("--input", input_csv, "sequence CSV to analyse instead of the config forcing");
    }
  }

  sc::ExampleOptions ex;
  std::string ex_window;
  auto* example = app.add_subcommand("example", "built-in heat / wave scenario on a Dirichlet grid");
  example->add_option("which", ex.which, "heat or wave")->required()->check(CLI::IsMember({"heat", "wave"}));
  example->add_option("--n", ex.n, "interior grid points per axis")->capture_default_str();
  example->set_help_flag("--help", "print this help message and exit");
  example->add_option("--h", ex.h, "grid spacing")->capture_default_str();
  example->add_option("--dims", ex.dims, "1 or 2")->capture_default_str();
  example->add_option("--window", ex_window, "solve window, A:B");
  example->add_option("--tol", ex.tol, "solver tolerance")->capture_default_str();
  example->add_option("--out", ex.out_dir, "output directory")->capture_default_str();
  example->add_option("--threads", ex.threads, "worker threads (default: APSEQ_THREADS or 1)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (example->parsed()) {
      if (!ex_window.empty()) ex.window = parse_window(ex_window);
      const int code = sc::run_example(ex);
      std::printf("example %s: exit %d, outputs in %s\n", ex.which.c_str(), code, ex.out_dir.string().c_str());
      return code;
    }
    const CLI::App* cmd = app.get_subcommands().front();
    sc::ScenarioConfig config = sc::parse_file(common.config);
    if (!common.window.empty()) config.window = parse_window(common.window);
    if (common.tol != 0.0) {
      if (!(common.tol > 0.0)) throw apseq::InputContractError("--tol must be positive");
      config.tol = common.tol;
    }
    sc::RunOptions run;
    run.command = cmd->get_name();
    run.out_dir = common.out;
    run.threads = common.threads;
    if (!input_csv.empty()) run.input_csv = input_csv;
    const int code = sc::run(config, run);
    std::printf("%s: exit %d, outputs in %s\n", run.command.c_str(), code, common.out.c_str());
    return code;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "apseq: %s\n", e.what());
    return sc::exit_code_for(e);
  }
}
