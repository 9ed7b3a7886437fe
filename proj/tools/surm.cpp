#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "commands.hpp"

namespace {

constexpr int kClaimFailure = 3;

void write_text(const std::string& path, const std::string& text) {
  if (path.empty()) return;
  if (path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << text;
}

std::string read_text(const std::string& path) {
  if (path == "-") {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structured unrestricted-rank matrix experiments"};
  app.require_subcommand(1);

  std::string out = "-";
  bool assert_claims = false;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--out", out, "JSON report path ('-' for stdout)");
    sub->add_flag("--assert", assert_claims, "exit with status 3 when any claim fails");
  };

  surm::cli::PsdOptions psd;
  auto* psd_cmd = app.add_subcommand("approx-psd", "low-rank vs Kronecker vs circulant vs Toeplitz on PSD targets");
  psd_cmd->add_option("--n", psd.n, "matrix size")->capture_default_str();
  psd_cmd->add_option("--trials", psd.trials, "number of seeded trials")->capture_default_str();
  psd_cmd->add_option("--seed", psd.seed, "master seed")->capture_default_str();
  psd_cmd->add_option("--iters", psd.iters, "gradient descent iterations")->capture_default_str();
  psd_cmd->add_option("--lr", psd.learning_rate, "gradient descent learning rate")->capture_default_str();
  common(psd_cmd);

  surm::cli::ClassOptions cls;
  std::string cls_csv;
  auto* cls_cmd = app.add_subcommand("approx-classes", "fit one structured class to one synthetic target");
  cls_cmd->add_option("--class", cls.matrix_class, "target class")
      ->check(CLI::IsMember({"random", "near-low-rank", "low-intrinsic"}))
      ->capture_default_str();
  cls_cmd->add_option("--method", cls.method, "approximator")
      ->check(CLI::IsMember({"circulant", "toeplitz", "ldr"}))
      ->capture_default_str();
  cls_cmd->add_option("--r", cls.r, "displacement rank for ldr")->capture_default_str();
  cls_cmd->add_option("--target-rank", cls.target_rank, "rank of the near-low-rank target")->capture_default_str();
  cls_cmd->add_option("--eps", cls.eps, "noise scale of the target")->capture_default_str();
  cls_cmd->add_option("--n", cls.n, "matrix size")->capture_default_str();
  cls_cmd->add_option("--seed", cls.seed, "master seed")->capture_default_str();
  cls_cmd->add_option("--iters", cls.iters, "gradient descent iterations")->capture_default_str();
  cls_cmd->add_option("--lr", cls.learning_rate,
                      "learning rate (default: 1e-4 for ldr, 1/(4n) for the linear classes)");
  cls_cmd->add_option("--csv", cls_csv, "error trace CSV path");
  common(cls_cmd);

  surm::cli::PinwheelOptions pw;
  std::string pw_csv, pw_grid;
  auto* pw_cmd = app.add_subcommand("pinwheel", "train the toy MLP on the pinwheel dataset");
  pw_cmd->add_option("--layer", pw.layer, "hidden layer kind")
      ->check(CLI::IsMember({"dense", "low-rank-1", "circulant", "sym-toeplitz", "toeplitz"}))
      ->capture_default_str();
  pw_cmd->add_option("--epochs", pw.epochs, "training epochs")->capture_default_str();
  pw_cmd->add_flag("--freeze-embedding,!--train-embedding", pw.freeze_embedding,
                   "keep the random embedding layer fixed (default)");
  pw_cmd->add_option("--seed", pw.seed, "seed for data and initialization")->capture_default_str();
  pw_cmd->add_option("--lr", pw.learning_rate, "learning rate")->capture_default_str();
  pw_cmd->add_option("--spokes", pw.spokes, "number of arms / classes")->capture_default_str();
  pw_cmd->add_option("--points", pw.points_per_spoke, "points per arm")->capture_default_str();
  pw_cmd->add_option("--noise", pw.noise_std, "angular noise std")->capture_default_str();
  pw_cmd->add_option("--rate", pw.angular_rate, "angle added per unit radius")->capture_default_str();
  pw_cmd->add_flag("--compare", pw.compare, "also train dense, rank-1 and circulant references");
  pw_cmd->add_option("--csv", pw_csv, "epoch,loss,accuracy CSV path");
  pw_cmd->add_option("--grid", pw_grid, "decision-boundary grid CSV path");
  common(pw_cmd);

  std::size_t dim = 0;
  auto* kron_cmd = app.add_subcommand("kron-shapes", "parameter-minimizing Kronecker factor shapes");
  kron_cmd->add_option("--dim", dim, "matrix dimension")->required();
  common(kron_cmd);

  std::string input;
  auto* an_cmd = app.add_subcommand("analyze", "rank and nonsingularity of a serialized matrix or delta");
  an_cmd->add_option("--input", input, "JSON file ('-' for stdin)")->required();
  common(an_cmd);

  CLI11_PARSE(app, argc, argv);

  try {
    nlohmann::json report;
    if (*psd_cmd) {
      report = surm::cli::approx_psd(psd);
    } else if (*cls_cmd) {
      std::string csv;
      report = surm::cli::approx_classes(cls, cls_csv.empty() ? nullptr : &csv);
      write_text(cls_csv, csv);
    } else if (*pw_cmd) {
      std::string csv, grid;
      report = surm::cli::pinwheel(pw, pw_csv.empty() ? nullptr : &csv, pw_grid.empty() ? nullptr : &grid);
      write_text(pw_csv, csv);
      write_text(pw_grid, grid);
    } else if (*kron_cmd) {
      report = surm::cli::kron_shapes(dim);
      if (report["summary"]["degenerate"].get<bool>()) {
        std::cerr << "warning: " << report["summary"]["warning"].get<std::string>() << "\n";
      }
    } else if (*an_cmd) {
      try {
        report = surm::cli::analyze(read_text(input), input);
      } catch (const nlohmann::json::parse_error& e) {
        std::cerr << "error: " << input << ": malformed JSON at byte " << e.byte << ": " << e.what() << "\n";
        return 1;
      }
    }
    write_text(out, report.dump(2) + "\n");
    if (assert_claims && !surm::cli::all_claims_pass(report)) {
      for (const auto& c : report["claims"])
        if (!c["passed"].get<bool>()) std::cerr << "claim failed: " << c["name"].get<std::string>() << "\n";
      return kClaimFailure;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
