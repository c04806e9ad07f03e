// Copyright 2026 The coper Authors.
// SPDX-License-Identifier: Apache-2.0

// coper: command-line front end.
//
//   coper run CONFIG [--seed S]... [--out DIR] [--downsample] [--trajectory]
//   coper compare CONFIG_A CONFIG_B [same flags]
//   coper validate-theory SUITE [--seed S] [--out DIR]
//   coper alpha-dim ksparse --n N --k K --bits LO:HI [--samples S] [--seed S] [--out DIR]
//   coper alpha-dim dct --image PATH --quality q1,q2,... [--downsample] [--out DIR]
//
// The output directory defaults to $COPER_OUT_DIR, then ./coper-out.
// Exit status: 0 on completion (divergent runs included), 1 when a theory
// suite reports violations, 2 on bad input.

#include "coper/harness/config.hpp"
#include "coper/harness/experiment.hpp"
#include "coper/harness/suites.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

using namespace coper;
using namespace coper::harness;

struct RunFlags {
  std::vector<std::uint64_t> seeds;
  std::string out;
  bool downsample = false;
  bool trajectory = false;
  std::int64_t workers = 0;
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--seed", f.seeds, "Replace the config's seed list (repeatable)");
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_flag("--downsample", f.downsample, "Halve the image until it is at most 128x128");
  cmd->add_flag("--trajectory", f.trajectory, "Write per-iteration traces");
  cmd->add_option("--workers", f.workers, "Worker threads across seeds");
}

ExperimentConfig apply_flags(ExperimentConfig c, const RunFlags& f) {
  if (!f.seeds.empty()) c.seeds = f.seeds;
  if (!f.out.empty()) c.output_dir = f.out;
  if (f.downsample) c.signal.downsample = true;
  if (f.trajectory) c.trajectory = true;
  if (f.workers > 0) c.workers = f.workers;
  c.validate();
  return c;
}

std::string out_dir(const std::string& flag) { return flag.empty() ? default_output_dir() : flag; }

int cmd_run(const std::string& path, const RunFlags& f) {
  const auto cfg = apply_flags(load_config(path), f);
  const auto rep = run_experiment(cfg);
  write_summary(std::cout, rep);
  std::cout << "wrote " << rep.output_dir << "/results.csv\n";
  return 0;
}

int cmd_compare(const std::string& a, const std::string& b, const RunFlags& f) {
  auto ca = apply_flags(load_config(a), f);
  auto cb = apply_flags(load_config(b), f);
  const auto rep = compare_solvers(ca, cb);
  write_comparison_summary(std::cout, rep);
  std::cout << "wrote " << rep.output_dir << "/comparison.csv\n";
  return 0;
}

int cmd_validate(const std::string& suite, std::uint64_t seed, const std::string& out) {
  const auto outcome = run_theory_suite(suite, seed);
  const std::filesystem::path dir(out_dir(out));
  std::filesystem::create_directories(dir);
  {
    // Reports differ in their parameter columns, so each block has its own header.
    std::ofstream csv(dir / "theory.csv");
    csv << "# coper-theory v1\n";
    for (std::size_t i = 0; i < outcome.reports.size(); ++i) {
      if (i > 0) csv << '\n';
      outcome.reports[i].write_csv(csv);
    }
  }
  std::ofstream summary(dir / "summary.txt");
  for (std::ostream* os : {static_cast<std::ostream*>(&std::cout), static_cast<std::ostream*>(&summary)}) {
    *os << "suite " << suite << " seed " << seed << '\n';
    for (const auto& r : outcome.reports) {
      *os << "  " << (r.passed() ? "pass" : "FAIL") << "  " << r.name << "  " << r.rows.size() << " rows, "
          << r.violations() << " violations\n";
    }
    for (const auto& n : outcome.notes) *os << "  note  " << n << '\n';
  }
  return outcome.passed() ? 0 : 1;
}

std::pair<unsigned, unsigned> parse_range(const std::string& s) {
  const auto colon = s.find(':');
  if (colon == std::string::npos) {
    const auto v = static_cast<unsigned>(std::stoul(s));
    return {v, v};
  }
  return {static_cast<unsigned>(std::stoul(s.substr(0, colon))), static_cast<unsigned>(std::stoul(s.substr(colon + 1)))};
}

int write_alpha(const std::string& family, const std::vector<RatePoint>& pts, const std::vector<std::string>& labels,
                const std::string& out) {
  const std::filesystem::path dir(out_dir(out));
  std::filesystem::create_directories(dir);
  std::ofstream csv(dir / "alpha.csv");
  csv << "# coper-alpha v1\n# family: " << family << "\nsetting,rate_bits,distortion\n";
  for (std::size_t i = 0; i < pts.size(); ++i) csv << labels[i] << ',' << fmt(pts[i].rate) << ',' << fmt(pts[i].distortion) << '\n';
  std::ofstream summary(dir / "summary.txt");
  for (std::ostream* os : {static_cast<std::ostream*>(&std::cout), static_cast<std::ostream*>(&summary)}) {
    *os << "family " << family << '\n';
    for (std::size_t i = 0; i < pts.size(); ++i) {
      *os << "  " << labels[i] << "  r=" << fmt(pts[i].rate) << "  delta=" << fmt(pts[i].distortion) << '\n';
    }
    try {
      *os << "alpha-dimension estimate " << fmt(alpha_dimension_estimate(pts)) << '\n';
    } catch (const DegenerateError& e) {
      *os << "alpha-dimension estimate unavailable: " << e.what() << '\n';
    }
  }
  return 0;
}

int cmd_alpha_ksparse(std::int64_t n, std::int64_t k, const std::string& bits, std::size_t samples,
                      std::uint64_t seed, const std::string& out) {
  const auto [lo, hi] = parse_range(bits);
  if (lo < 1 || hi < lo) throw ArgumentError("--bits: expected LO:HI with 1 <= LO <= HI");
  std::vector<CVec> sample;
  for (std::size_t i = 0; i < samples; ++i) sample.push_back(random_sparse_unit(n, k, derive_seed(seed, {i})));
  std::vector<RatePoint> pts;
  std::vector<std::string> labels;
  for (unsigned b = lo; b <= hi; ++b) {
    const KSparseQuantizingCode code(n, k, b, true);
    pts.push_back({static_cast<double>(*code.fixed_rate()), measure_distortion(code, sample)});
    labels.push_back("bits=" + std::to_string(b));
  }
  return write_alpha(KSparseQuantizingCode(n, k, lo, true).describe(), pts, labels, out);
}

// Rate is the encoded length on the given image; distortion is the relative
// l2 round-trip error on that image.
int cmd_alpha_dct(const std::string& path, const std::vector<double>& qualities, bool downsample,
                  const std::string& out) {
  if (qualities.empty()) throw ArgumentError("--quality: at least one value is required");
  const Image img = load_image(resolve_data_path(path), downsample);
  const CVec x = img.pixels.cast<Complex>();
  std::vector<RatePoint> pts;
  std::vector<std::string> labels;
  for (double q : qualities) {
    const DctThresholdCode code(img.rows, img.cols, q);
    const Bitstring b = code.encode(x);
    pts.push_back({static_cast<double>(b.size()), (code.decode(b) - x).norm() / x.norm()});
    labels.push_back("q=" + fmt(q));
  }
  return write_alpha("dct-threshold on " + path, pts, labels, out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Phase retrieval with compression codes: experiments and checks"};
  app.require_subcommand(1);

  RunFlags run_flags;
  std::string config_a, config_b;
  auto* run = app.add_subcommand("run", "Run one experiment config");
  run->add_option("config", config_a, "Config file (JSON)")->required()->check(CLI::ExistingFile);
  add_run_flags(run, run_flags);

  auto* cmp = app.add_subcommand("compare", "Run two solver configs on the same measurements");
  cmp->add_option("config_a", config_a, "First config")->required()->check(CLI::ExistingFile);
  cmp->add_option("config_b", config_b, "Second config")->required()->check(CLI::ExistingFile);
  add_run_flags(cmp, run_flags);

  std::string suite, out;
  std::uint64_t seed = 1;
  auto* val = app.add_subcommand("validate-theory", "Monte Carlo checks of the analytic bounds");
  val->add_option("suite", suite, "Suite name or 'all'")->required()->check(CLI::IsMember([] {
    auto names = suite_names();
    names.push_back("all");
    return names;
  }()));
  val->add_option("--seed", seed, "Seed");
  val->add_option("--out", out, "Output directory");

  std::string family, bits = "2:10", image;
  std::int64_t n = 64, k = 3;
  std::size_t samples = 2000;
  std::vector<double> qualities;
  bool alpha_downsample = false;
  auto* alpha = app.add_subcommand("alpha-dim", "Rate-distortion points and alpha-dimension estimate");
  alpha->add_option("family", family, "ksparse | dct")->required()->check(CLI::IsMember({"ksparse", "dct"}));
  alpha->add_option("--n", n, "ksparse: dimension");
  alpha->add_option("--k", k, "ksparse: sparsity");
  alpha->add_option("--bits", bits, "ksparse: bit range LO:HI");
  alpha->add_option("--samples", samples, "ksparse: signals used to measure distortion");
  alpha->add_option("--image", image, "dct: graymap path");
  alpha->add_option("--quality", qualities, "dct: quality values")->delimiter(',');
  alpha->add_flag("--downsample", alpha_downsample, "dct: reduce the image to 128x128");
  alpha->add_option("--seed", seed, "Seed");
  alpha->add_option("--out", out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;  // --help exits 0
  }

  try {
    if (*run) return cmd_run(config_a, run_flags);
    if (*cmp) return cmd_compare(config_a, config_b, run_flags);
    if (*val) return cmd_validate(suite, seed, out);
    if (*alpha) {
      if (family == "ksparse") return cmd_alpha_ksparse(n, k, bits, samples, seed, out);
      if (image.empty()) throw ArgumentError("alpha-dim dct: --image is required");
      return cmd_alpha_dct(image, qualities, alpha_downsample, out);
    }
  } catch (const ConfigError& e) {
    std::cerr << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
