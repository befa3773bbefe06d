#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "krsketch/embedding.hpp"
#include "krsketch/error.hpp"
#include "krsketch/io.hpp"
#include "krsketch/random.hpp"
#include "krsketch/synthbench.hpp"

namespace krs::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Config files are either plain key=value lines or a flat JSON object. Keys
// are routed to the subcommand named on the command line.
class KeyValueOrJsonConfig : public CLI::ConfigBase {
 public:
  std::string section;

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    auto items = parse(input);
    if (!section.empty())
      for (auto& item : items) item.parents = {section};
    return items;
  }

 private:
  std::vector<CLI::ConfigItem> parse(std::istream& input) const {
    std::stringstream buf;
    buf << input.rdbuf();
    const std::string text = buf.str();
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string::npos || text[first] != '{') {
      std::istringstream again(text);
      return CLI::ConfigBase::from_config(again);
    }
    const json j = json::parse(text);
    std::vector<CLI::ConfigItem> items;
    for (const auto& [key, value] : j.items()) {
      CLI::ConfigItem item;
      item.name = key;
      auto scalar = [](const json& v) {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_boolean()) return std::string(v.get<bool>() ? "true" : "false");
        return v.dump();
      };
      if (value.is_array()) {
        for (const auto& e : value) item.inputs.push_back(scalar(e));
      } else {
        item.inputs.push_back(scalar(value));
      }
      items.push_back(std::move(item));
    }
    return items;
  }
};

struct Outputs {
  fs::path main;
  fs::path summary;
};

Outputs resolve_outputs(const RunConfig& cfg, std::string_view default_stem) {
  Outputs o;
  const std::string ext = cfg.format == "json" ? ".json" : ".csv";
  o.main = cfg.out.empty() ? fs::path(std::string(default_stem) + ext) : fs::path(cfg.out);
  if (!cfg.summary.empty()) {
    o.summary = cfg.summary;
  } else {
    fs::path s = o.main;
    s.replace_extension();
    o.summary = s.string() + ".summary.json";
  }
  return o;
}

std::vector<Strategy> strategies_of(const RunConfig& cfg) {
  std::vector<Strategy> out;
  for (const auto& s : cfg.strategies) out.push_back(parse_strategy(s));
  if (out.empty()) throw DomainError("--strategy needs at least one value");
  return out;
}

json base_metadata(const RunConfig& cfg) {
  json strategies = json::array();
  for (const auto& s : cfg.strategies) strategies.push_back(s);
  return {{"seed", cfg.seed}, {"trials", cfg.trials}, {"rcond", cfg.rcond}, {"strategies", strategies}};
}

std::function<void(const std::string&)> logger(const RunConfig& cfg, std::ostream& err) {
  if (cfg.quiet) return {};
  return [&err](const std::string& line) { err << line << '\n'; };
}

void emit_sweep(const RunConfig& cfg, std::string_view kind, const std::vector<SweepRecord>& records,
                const json& metadata, const std::string& csv_text, std::ostream& err) {
  const Outputs o = resolve_outputs(cfg, kind);
  const json summary = io::summary_json(kind, records, metadata);
  if (cfg.format == "json") {
    json doc = summary;
    doc["records"] = io::records_json(records);
    io::write_file_atomic(o.main, doc.dump(2) + "\n");
  } else {
    io::write_file_atomic(o.main, csv_text);
    io::write_file_atomic(o.summary, summary.dump(2) + "\n");
  }
  if (!cfg.quiet) {
    err << "wrote " << o.main.string();
    if (cfg.format != "json") err << " and " << o.summary.string();
    err << '\n';
  }
}

SweepConfig sweep_config(const RunConfig& cfg, std::ostream& err) {
  SweepConfig sc;
  sc.strategies = strategies_of(cfg);
  if (!cfg.r_grid.empty()) sc.r_grid = cfg.r_grid;
  if (!cfg.n_grid.empty()) sc.n_grid = cfg.n_grid;
  if (!cfg.p_grid.empty()) sc.p_grid = cfg.p_grid;
  sc.n = cfg.n;
  sc.p = cfg.p;
  if (cfg.r > 0) {
    sc.r_n = cfg.r;
    sc.r_p = cfg.r;
  }
  sc.trials = cfg.trials;
  sc.seed = cfg.seed;
  sc.rcond = cfg.rcond;
  sc.noise = cfg.noise >= 0.0 ? cfg.noise : kDefaultNoise;
  sc.jobs = cfg.jobs;
  sc.timing = cfg.timing;
  sc.log = logger(cfg, err);
  return sc;
}

int cmd_sweep(const RunConfig& cfg, std::ostream& err) {
  const SweepConfig sc = sweep_config(cfg, err);
  std::vector<SweepRecord> records;
  std::string kind;
  json meta = base_metadata(cfg);
  meta["noise"] = sc.noise;
  // Reported alongside the figures; they do not enter the sweep mechanics.
  meta["eps"] = 0.5;
  meta["delta"] = 1e-3;
  switch (cfg.command) {
    case Subcommand::SweepR:
      kind = "sweep_r";
      meta["n1"] = sc.n;
      meta["n2"] = sc.n;
      meta["p"] = sc.p;
      records = sweep_r(sc);
      break;
    case Subcommand::SweepN:
      kind = "sweep_n";
      meta["r"] = sc.r_n;
      meta["p"] = sc.p;
      records = sweep_n(sc);
      break;
    default:
      kind = "sweep_p";
      meta["r"] = sc.r_p;
      meta["n1"] = sc.n;
      meta["n2"] = sc.n;
      records = sweep_p(sc);
      break;
  }
  emit_sweep(cfg, kind, records, meta, io::sweep_csv(records), err);
  return kOk;
}

int cmd_eit(const RunConfig& cfg, std::ostream& err) {
  EitSweepConfig ec;
  ec.strategies = strategies_of(cfg);
  if (!cfg.r_grid.empty()) ec.r_grid = cfg.r_grid;
  ec.trials = cfg.trials;
  ec.seed = cfg.seed;
  ec.rcond = cfg.rcond;
  ec.jobs = cfg.jobs;
  ec.timing = cfg.timing;
  ec.log = logger(cfg, err);
  ec.problem.nx = cfg.nx;
  ec.problem.sigma_star = cfg.sigma_star;
  ec.problem.noise_sd = cfg.noise >= 0.0 ? cfg.noise : 1e-8;
  ec.problem.quadrature = parse_quadrature(cfg.quadrature);
  ec.problem.sources.hat_count = cfg.sources;
  ec.problem.sources.exclude_corners = cfg.exclude_corners;
  ec.problem.sources.delta_scale = cfg.delta_scale;
  if (!cfg.inclusions.empty()) ec.problem.inclusions = parse_inclusions(cfg.inclusions);

  const EitSweepResult res = eit_sweep(ec);
  json meta = base_metadata(cfg);
  meta["nx"] = cfg.nx;
  meta["sigma_star"] = cfg.sigma_star;
  meta["noise_sd"] = ec.problem.noise_sd;
  meta["quadrature"] = cfg.quadrature;
  meta["sources"] = res.records.empty() ? 0 : res.records.front().n1;
  const io::EitMeta em{cfg.nx, cfg.sigma_star, ec.problem.noise_sd};
  emit_sweep(cfg, "eit", res.records, meta, io::eit_csv(res.records, em), err);

  // Ground truth plus the trial-0 reconstruction at the largest r.
  const Outputs o = resolve_outputs(cfg, "eit");
  fs::path stem = o.main;
  stem.replace_extension();
  const auto grid_path = [&](std::string_view tag) { return fs::path(stem.string() + "_grid_" + std::string(tag) + ".csv"); };
  io::write_file_atomic(grid_path("truth"), io::grid_csv(res.nx, res.sigma_true));
  for (std::size_t s = 0; s < ec.strategies.size(); ++s) {
    io::write_file_atomic(grid_path(strategy_name(ec.strategies[s])),
                          io::grid_csv(res.nx, res.final_reconstructions[s]));
  }
  return kOk;
}

struct PropertyRow {
  std::string property;
  std::string statistic;
  double value = 0.0;
  double bound = 0.0;
  bool pass = false;
};

int emit_properties(const RunConfig& cfg, std::string_view kind, const std::vector<PropertyRow>& rows,
                    const json& metadata, std::ostream& out, std::ostream& err) {
  bool all = true;
  std::string text;
  if (cfg.format == "json") {
    json arr = json::array();
    for (const auto& r : rows) {
      arr.push_back({{"property", r.property}, {"statistic", r.statistic}, {"value", r.value},
                     {"bound", r.bound}, {"pass", r.pass}});
      all = all && r.pass;
    }
    json doc{{"schema", "krsketch-diagnostics"}, {"schema_version", io::kSchemaVersion},
             {"kind", kind}, {"metadata", metadata}, {"properties", arr}, {"all_pass", all}};
    text = doc.dump(2) + "\n";
  } else {
    text = "# krsketch-diagnostics v" + std::to_string(io::kSchemaVersion) + "\n";
    text += "property,statistic,value,bound,pass\n";
    for (const auto& r : rows) {
      text += r.property + ',' + r.statistic + ',' + io::format_double(r.value) + ',' +
              io::format_double(r.bound) + ',' + (r.pass ? "PASS" : "FAIL") + '\n';
      all = all && r.pass;
    }
  }
  if (cfg.out.empty()) {
    out << text;
  } else {
    io::write_file_atomic(cfg.out, text);
    if (!cfg.quiet) err << "wrote " << cfg.out << '\n';
  }
  return all ? kOk : kNumerical;
}

int cmd_zeta_test(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const Index p = cfg.p;
  SigmaSpectrum sigma = cfg.spectrum == "unit"      ? SigmaSpectrum::unit(p)
                        : cfg.spectrum == "uniform" ? SigmaSpectrum::uniform(p)
                        : cfg.spectrum == "random"  ? SigmaSpectrum::random(p, cfg.seed)
                                                    : throw DomainError("--spectrum must be unit, uniform or random");
  const double sp = std::sqrt(static_cast<double>(p));
  const std::vector<double> ts{sp, 1.5 * sp, 2.0 * sp, 3.0 * sp};
  const ZetaStats st = zeta_sample(sigma, cfg.draws, cfg.seed, ts);
  const double n = static_cast<double>(st.n);

  std::vector<PropertyRow> rows;
  const double m2_band = 4.0 * std::sqrt(8.0 / n);
  rows.push_back({"second_moment", "m2", st.m2, m2_band, std::abs(st.m2 - 1.0) <= m2_band});
  const double m4_sd = std::sqrt(std::max(0.0, st.m8 - st.m4 * st.m4) / n);
  rows.push_back({"fourth_moment", "m4", st.m4, 9.0 + 4.0 * m4_sd, st.m4 <= 9.0 + 4.0 * m4_sd});
  const double v_sd = std::sqrt(std::max(0.0, st.var_sq_4 - st.var_sq * st.var_sq) / n);
  rows.push_back({"variance_of_square", "mean((zeta^2-1)^2)", st.var_sq, 8.0 + 4.0 * v_sd,
                  st.var_sq <= 8.0 + 4.0 * v_sd});
  for (const auto& tc : st.tails) {
    const double b = std::min(1.0, zeta_tail_bound(tc.t, p));
    const double slack = 3.0 * std::sqrt(b * (1.0 - b) / n);
    const double freq = static_cast<double>(tc.exceed) / n;
    rows.push_back({"tail_t=" + io::format_double(tc.t), "P(|zeta|>t)", freq, b + slack, freq <= b + slack});
  }
  json meta{{"p", p}, {"draws", cfg.draws}, {"seed", cfg.seed}, {"spectrum", cfg.spectrum}};
  return emit_properties(cfg, "zeta_test", rows, meta, out, err);
}

int cmd_embed_test(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const Index p = cfg.p;
  Index pf = static_cast<Index>(std::floor(std::sqrt(static_cast<double>(p))));
  while (pf > 1 && p % pf != 0) --pf;
  const Index pg = p / pf;
  if (std::max(pf, pg) > cfg.n) throw DomainError("embed-test: n must be >= the basis factor sizes");
  const double c0 = cfg.c0 > 0.0 ? cfg.c0 : kCalibratedC0;

  // Subspace Range(U_F kron U_G) of dimension p = pf * pg.
  const SynthProblem prob = gen_problem(cfg.n, cfg.n, std::max(pf, pg), cfg.seed, 0.0);
  const RangeBasis full = RangeBasis::from_factors(prob.op.terms()[0].forward, prob.op.terms()[0].adjoint);
  const RangeBasis basis{full.uf.leftCols(pf), full.ug.leftCols(pg)};

  std::vector<PropertyRow> rows;
  {
    DenseVector x(basis.dim());
    GaussianStream(cfg.seed, StreamTag::TestVector, 4).fill(0, {x.data(), static_cast<std::size_t>(x.size())});
    const double err_iso = std::abs(kr_apply(basis.as_operator(), x).norm() - x.norm()) / x.norm();
    rows.push_back({"basis_isometry", "rel_norm_error", err_iso, 1e-12, err_iso <= 1e-12});
  }
  const Index r = embed_dim_gaussian(cfg.eps, cfg.delta, p, c0).r;
  for (const Strategy strat : strategies_of(cfg)) {
    std::vector<double> sups(static_cast<std::size_t>(cfg.seeds));
    parallel_for(sups.size(), cfg.jobs, [&](std::size_t k) {
      const Sketch s = make_sketch(strat, SketchSize{r, 0, 0}, cfg.n, cfg.n, trial_seed(cfg.seed, k));
      sups[k] = sup_distortion_sampled(s, basis, cfg.samples, trial_seed(cfg.seed, k));
    });
    std::size_t ok = 0;
    for (double v : sups) ok += v <= cfg.eps ? 1 : 0;
    const double frac = static_cast<double>(ok) / static_cast<double>(sups.size());
    rows.push_back({"embedding_" + std::string(strategy_name(strat)) + "_r=" + std::to_string(r),
                    "fraction(sup_distortion<=eps)", frac, 1.0 - cfg.delta, frac >= 1.0 - cfg.delta});
    if (!cfg.quiet) err << strategy_name(strat) << ": fraction " << frac << " at r=" << r << '\n';
  }
  json meta{{"p", p}, {"pf", pf}, {"pg", pg}, {"n1", cfg.n}, {"n2", cfg.n}, {"eps", cfg.eps},
            {"delta", cfg.delta}, {"c0", c0}, {"r", r}, {"seeds", cfg.seeds}, {"samples", cfg.samples},
            {"seed", cfg.seed}};
  return emit_properties(cfg, "embed_test", rows, meta, out, err);
}

void add_common(CLI::App* sub, RunConfig& cfg) {
  sub->option_defaults()->always_capture_default();
  sub->add_option("--strategy", cfg.strategies, "Sketch strategies: case1, case2, gaussian")->delimiter(',');
  sub->add_option("--trials", cfg.trials, "Independent sketches per grid point")->check(CLI::PositiveNumber);
  sub->add_option("--seed", cfg.seed, "Master seed");
  sub->add_option("--rcond", cfg.rcond, "Relative singular value cutoff for least squares")
      ->check(CLI::Range(0.0, 0.999999));
  sub->add_option("--out", cfg.out, "Output file");
  sub->add_option("--format", cfg.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  sub->add_option("--summary", cfg.summary, "Medians summary JSON path (csv format)");
  sub->add_option("--jobs", cfg.jobs, "Worker threads (0: all cores)");
  sub->add_flag("--timing", cfg.timing, "Record wall_time_ms (makes output non-reproducible)");
  sub->add_flag("--quiet", cfg.quiet, "No progress lines");
  sub->fallthrough();
}

}  // namespace

std::vector<Inclusion> parse_inclusions(const std::vector<std::string>& specs) {
  std::vector<Inclusion> out;
  for (const auto& s : specs) {
    std::vector<double> v;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ':')) {
      try {
        std::size_t used = 0;
        v.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw DomainError("bad inclusion '" + s + "' (expected x0:y0:side:amplitude)");
      }
    }
    if (v.size() != 4) throw DomainError("bad inclusion '" + s + "' (expected x0:y0:side:amplitude)");
    out.push_back({v[0], v[1], v[2], v[3]});
  }
  return out;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Structured random sketching for Khatri-Rao least squares"};
  app.require_subcommand(1);
  auto formatter = std::make_shared<KeyValueOrJsonConfig>();
  app.config_formatter(formatter);
  app.set_config("--config", "", "Config file: key=value lines or a JSON object (flags win)");
  app.allow_config_extras(CLI::config_extras_mode::error);
  RunConfig cfg;

  auto* sr = app.add_subcommand("sweep-r", "Relative error against sketch size r");
  add_common(sr, cfg);
  sr->add_option("--r-grid", cfg.r_grid, "Sketch sizes")->delimiter(',');
  sr->add_option("--n", cfg.n, "n1 = n2")->check(CLI::PositiveNumber);
  sr->add_option("--p", cfg.p, "Unknowns")->check(CLI::PositiveNumber);
  sr->add_option("--noise", cfg.noise, "Noise level (default 1e-6)");

  auto* sn = app.add_subcommand("sweep-n", "Relative error against n1 = n2 at fixed r");
  add_common(sn, cfg);
  sn->add_option("--n-grid", cfg.n_grid, "n1 = n2 values")->delimiter(',');
  sn->add_option("--r", cfg.r, "Sketch size (default 2209)");
  sn->add_option("--p", cfg.p, "Unknowns")->check(CLI::PositiveNumber);
  sn->add_option("--noise", cfg.noise, "Noise level (default 1e-6)");

  auto* sp = app.add_subcommand("sweep-p", "Relative error against p at fixed r");
  add_common(sp, cfg);
  sp->add_option("--p-grid", cfg.p_grid, "Unknown counts")->delimiter(',');
  sp->add_option("--r", cfg.r, "Sketch size (default 4096)");
  sp->add_option("--n", cfg.n, "n1 = n2")->check(CLI::PositiveNumber);
  sp->add_option("--noise", cfg.noise, "Noise level (default 1e-6)");

  auto* se = app.add_subcommand("eit", "Sketched linearized EIT reconstruction");
  add_common(se, cfg);
  se->add_option("--r-grid", cfg.r_grid, "Sketch sizes")->delimiter(',');
  se->add_option("--nx", cfg.nx, "Cells per side")->check(CLI::Range(Index{2}, Index{4096}));
  se->add_option("--sigma-star", cfg.sigma_star, "Background conductivity");
  se->add_option("--noise", cfg.noise, "Noise standard deviation (default 1e-8)");
  se->add_option("--sources", cfg.sources, "0: one delta per boundary node; N: N perimeter hats");
  se->add_flag("--exclude-corners", cfg.exclude_corners, "Drop the four corner sources");
  se->add_option("--delta-scale", cfg.delta_scale, "Value of a discrete delta source");
  se->add_option("--quadrature", cfg.quadrature, "Cell quadrature")
      ->check(CLI::IsMember({"one_point", "four_point"}));
  se->add_option("--inclusion", cfg.inclusions, "Ground-truth square x0:y0:side:amplitude (repeatable)");

  auto* sb = app.add_subcommand("embed-test", "Monte Carlo embedding check on a tensor-structured subspace");
  add_common(sb, cfg);
  sb->add_option("--p", cfg.p, "Subspace dimension")->check(CLI::PositiveNumber);
  sb->add_option("--n", cfg.n, "n1 = n2")->check(CLI::PositiveNumber);
  sb->add_option("--eps", cfg.eps, "Distortion level")->check(CLI::Range(1e-6, 0.5));
  sb->add_option("--delta", cfg.delta, "Failure probability")->check(CLI::Range(1e-12, 0.5));
  sb->add_option("--c0", cfg.c0, "Constant in r = C0/eps^2 (|ln delta| + p); 0 uses the calibrated value");
  sb->add_option("--seeds", cfg.seeds, "Independent sketches")->check(CLI::PositiveNumber);
  sb->add_option("--samples", cfg.samples, "Sphere samples per sketch")->check(CLI::PositiveNumber);

  auto* sz = app.add_subcommand("zeta-test", "Moments and tails of zeta = xi^T Sigma eta");
  add_common(sz, cfg);
  sz->add_option("--p", cfg.p, "Spectrum length")->check(CLI::PositiveNumber);
  sz->add_option("--draws", cfg.draws, "Monte Carlo draws")->check(CLI::PositiveNumber);
  sz->add_option("--spectrum", cfg.spectrum, "unit, uniform or random")
      ->check(CLI::IsMember({"unit", "uniform", "random"}));

  std::vector<const char*> args(argv, argv + argc);
  for (int i = 1; i < argc; ++i) {
    if (app.get_subcommand_no_throw(argv[i]) != nullptr) {
      formatter->section = argv[i];
      break;
    }
  }
  try {
    app.parse(static_cast<int>(args.size()), args.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsage;
  }

  if (sr->parsed()) cfg.command = Subcommand::SweepR;
  if (sn->parsed()) cfg.command = Subcommand::SweepN;
  if (sp->parsed()) cfg.command = Subcommand::SweepP;
  if (se->parsed()) cfg.command = Subcommand::Eit;
  if (sb->parsed()) {
    cfg.command = Subcommand::EmbedTest;
    if (sb->count("--p") == 0) cfg.p = 4;
    if (sb->count("--n") == 0) cfg.n = 10;
    if (sb->count("--strategy") == 0) cfg.strategies = {"gaussian"};
  }
  if (sz->parsed()) {
    cfg.command = Subcommand::ZetaTest;
    if (sz->count("--p") == 0) cfg.p = 16;
  }

  try {
    switch (cfg.command) {
      case Subcommand::SweepR:
      case Subcommand::SweepN:
      case Subcommand::SweepP:
        return cmd_sweep(cfg, err);
      case Subcommand::Eit:
        return cmd_eit(cfg, err);
      case Subcommand::EmbedTest:
        return cmd_embed_test(cfg, out, err);
      case Subcommand::ZetaTest:
        return cmd_zeta_test(cfg, out, err);
    }
  } catch (const DimensionError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const CapacityError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kNumerical;
  }
  return kOk;
}

}  // namespace krs::cli
