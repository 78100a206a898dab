#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "kronreg/pgm.hpp"
#include "kronreg/problems.hpp"
#include "kronreg/tikhonov.hpp"

namespace kronreg {

/// One regularizer row: (kind, side) per Kronecker factor, labeled like the
/// canonical table rows ("P2Lt2xP1Lt1" = factor2 token x factor1 token).
struct RegPairSpec {
  RegKind kind1 = RegKind::L1;
  ProjSide side1 = ProjSide::None;
  RegKind kind2 = RegKind::L1;
  ProjSide side2 = ProjSide::None;
  std::string label;
};

namespace detail {

inline std::string reg_token(RegKind kind, ProjSide side) {
  const char* num = (kind == RegKind::L1) ? "1" : "2";
  const std::string lt = std::string("Lt") + num;
  switch (side) {
    case ProjSide::None:
      return lt;
    case ProjSide::Left:
      return std::string("P") + num + lt;
    case ProjSide::Right:
      return lt + "P" + num;
  }
  return lt;
}

inline std::pair<RegKind, ProjSide> parse_reg_token(const std::string& tok) {
  for (RegKind kind : {RegKind::L1, RegKind::L2}) {
    for (ProjSide side : {ProjSide::None, ProjSide::Left, ProjSide::Right}) {
      if (reg_token(kind, side) == tok) return {kind, side};
    }
  }
  throw config_error("unknown regularizer token: " + tok);
}

}  // namespace detail

inline std::string reg_pair_label(const RegPairSpec& spec) {
  return detail::reg_token(spec.kind2, spec.side2) + "x" +
         detail::reg_token(spec.kind1, spec.side1);
}

/// "AxB" with A the factor-2 token, B the factor-1 token.
inline RegPairSpec parse_reg_label(const std::string& label) {
  const auto pos = label.find('x');
  if (pos == std::string::npos || label.find('x', pos + 1) != std::string::npos) {
    throw config_error("regularizer label must be '<tok2>x<tok1>': " + label);
  }
  RegPairSpec spec;
  std::tie(spec.kind2, spec.side2) = detail::parse_reg_token(label.substr(0, pos));
  std::tie(spec.kind1, spec.side1) = detail::parse_reg_token(label.substr(pos + 1));
  spec.label = label;
  return spec;
}

/// The nine table rows in their canonical top-to-bottom order.
inline std::vector<RegPairSpec> canonical_regularizers() {
  std::vector<RegPairSpec> out;
  for (const char* label : {"Lt1xLt1", "P1Lt1xP1Lt1", "Lt1P1xLt1P1",
                            "Lt2xLt1", "P2Lt2xP1Lt1", "Lt2P2xLt1P1",
                            "Lt2xLt2", "P2Lt2xP2Lt2", "Lt2P2xLt2P2"}) {
    out.push_back(parse_reg_label(label));
  }
  return out;
}

struct ExperimentConfig {
  std::string problem;  // shaw2d | blur | custom
  Index n = 0;
  std::vector<double> noise_levels;
  std::vector<std::uint64_t> seeds;
  std::vector<RegPairSpec> regularizers;
  double eta = 1.01;
  int k_max = 0;
  std::pair<double, double> mu_bracket{1e-12, 1e12};
  std::optional<ImageKind> image_kind;
  std::string output_dir;
};

inline ImageKind parse_image_kind(const std::string& s) {
  if (s == "checker") return ImageKind::Checker;
  if (s == "blocks") return ImageKind::Blocks;
  if (s == "gradient") return ImageKind::Gradient;
  throw config_error("image_kind must be checker|blocks|gradient, got: " + s);
}

/// Fail-closed parse: unknown fields are rejected.
inline ExperimentConfig parse_config(const nlohmann::json& j) {
  static const std::set<std::string> known = {
      "problem", "n", "noise_levels", "seeds", "regularizers", "eta",
      "k_max", "mu_bracket", "image_kind", "output_dir"};
  if (!j.is_object()) throw config_error("config must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key())) throw config_error("unknown config field: " + it.key());
  }
  auto require = [&](const char* field) -> const nlohmann::json& {
    if (!j.contains(field)) throw config_error(std::string("missing config field: ") + field);
    return j.at(field);
  };

  ExperimentConfig cfg;
  cfg.problem = require("problem").get<std::string>();
  if (cfg.problem != "shaw2d" && cfg.problem != "blur" && cfg.problem != "custom") {
    throw config_error("problem must be shaw2d|blur|custom, got: " + cfg.problem);
  }
  cfg.n = require("n").get<Index>();
  if (cfg.n < 4) throw config_error("n must be >= 4");
  cfg.noise_levels = require("noise_levels").get<std::vector<double>>();
  if (cfg.noise_levels.empty()) throw config_error("noise_levels must be nonempty");
  for (double nu : cfg.noise_levels) {
    if (nu < 0.0) throw config_error("noise levels must be >= 0");
  }
  cfg.seeds = require("seeds").get<std::vector<std::uint64_t>>();
  if (cfg.seeds.empty()) throw config_error("seeds must be nonempty");

  const nlohmann::json& regs = require("regularizers");
  if (!regs.is_array() || regs.empty()) throw config_error("regularizers must be a nonempty array");
  for (const auto& r : regs) {
    if (r.is_string()) {
      cfg.regularizers.push_back(parse_reg_label(r.get<std::string>()));
    } else if (r.is_object()) {
      auto factor = [&](const char* name) -> std::pair<RegKind, ProjSide> {
        const auto& f = r.at(name);
        const std::string kind = f.at("kind").get<std::string>();
        const std::string side = f.at("side").get<std::string>();
        RegKind k;
        if (kind == "L1") k = RegKind::L1;
        else if (kind == "L2") k = RegKind::L2;
        else throw config_error("regularizer kind must be L1|L2");
        ProjSide s;
        if (side == "None") s = ProjSide::None;
        else if (side == "Left") s = ProjSide::Left;
        else if (side == "Right") s = ProjSide::Right;
        else throw config_error("regularizer side must be None|Left|Right");
        return {k, s};
      };
      RegPairSpec spec;
      std::tie(spec.kind1, spec.side1) = factor("factor1");
      std::tie(spec.kind2, spec.side2) = factor("factor2");
      spec.label = reg_pair_label(spec);
      cfg.regularizers.push_back(std::move(spec));
    } else {
      throw config_error("each regularizer must be a label string or a {factor1,factor2} object");
    }
  }

  if (j.contains("eta")) cfg.eta = j.at("eta").get<double>();
  if (cfg.eta < 1.0) throw config_error("eta must be >= 1");
  if (j.contains("k_max")) cfg.k_max = j.at("k_max").get<int>();
  if (j.contains("mu_bracket")) {
    auto br = j.at("mu_bracket").get<std::vector<double>>();
    if (br.size() != 2 || !(br[0] > 0.0 && br[0] < br[1])) {
      throw config_error("mu_bracket must be [mu_min, mu_max] with 0 < mu_min < mu_max");
    }
    cfg.mu_bracket = {br[0], br[1]};
  }
  if (j.contains("image_kind")) {
    cfg.image_kind = parse_image_kind(j.at("image_kind").get<std::string>());
  }
  cfg.output_dir = require("output_dir").get<std::string>();
  if (cfg.output_dir.empty()) throw config_error("output_dir must be nonempty");
  return cfg;
}

struct ResultRow {
  std::string regularizer_label;
  double noise_level = 0.0;
  std::uint64_t seed = 0;
  int k = 0;
  double mu = 0.0;
  double discrepancy_residual = 0.0;
  double relative_error = 0.0;
  double wall_seconds = 0.0;
  bool converged = false;
  double eps = 0.0;      // carried for checks, not serialized
  bool saturated = false;
};

namespace detail {

inline std::string fmt_double(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

inline std::string instance_tag(const ExperimentConfig& cfg, double nu, std::uint64_t seed) {
  return cfg.problem + "_nu" + fmt_double(nu) + "_seed" + std::to_string(seed);
}

}  // namespace detail

inline std::string csv_string(const std::vector<ResultRow>& rows) {
  std::string out = "regularizer,noise_level,seed,k,mu,residual,rel_error,wall_seconds,converged\n";
  for (const auto& r : rows) {
    out += r.regularizer_label + "," + detail::fmt_double(r.noise_level) + "," +
           std::to_string(r.seed) + "," + std::to_string(r.k) + "," +
           detail::fmt_double(r.mu) + "," + detail::fmt_double(r.discrepancy_residual) + "," +
           detail::fmt_double(r.relative_error) + "," + detail::fmt_double(r.wall_seconds) +
           "," + (r.converged ? "1" : "0") + "\n";
  }
  return out;
}

/// Runs the full (noise_level, seed, regularizer) grid, writes results.csv
/// and the PGM renderings under output_dir, and returns the rows in
/// canonical order. Deterministic except for the wall_seconds column.
inline std::vector<ResultRow> run(const ExperimentConfig& cfg) {
  if (cfg.problem == "custom") {
    throw config_error("problem 'custom' is only available through the library API");
  }
  namespace fs = std::filesystem;
  fs::create_directories(cfg.output_dir);

  std::vector<ResultRow> rows;
  for (double nu : cfg.noise_levels) {
    for (std::uint64_t seed : cfg.seeds) {
      ProblemInstance inst =
          cfg.problem == "shaw2d"
              ? make_shaw2d_instance(cfg.n, nu, seed)
              : make_blur_instance(cfg.n, cfg.image_kind.value_or(ImageKind::Checker), nu,
                                   seed);
      const std::string tag = detail::instance_tag(cfg, nu, seed);
      write_pgm(inst.setup.b_noisy, fs::path(cfg.output_dir) / (tag + "_data.pgm"));
      write_pgm(inst.x_true, fs::path(cfg.output_dir) / (tag + "_truth.pgm"));

      for (const RegPairSpec& reg : cfg.regularizers) {
        TikhonovKronProblem problem;
        problem.k1_factor = inst.k1_factor;
        problem.k2_factor = inst.k2_factor;
        problem.data_b = inst.setup.b_noisy;
        problem.reg1 = reg_factor(reg.kind1, cfg.n, reg.side1);
        problem.reg2 = reg_factor(reg.kind2, cfg.n, reg.side2);
        problem.noise_bound_eps = inst.setup.eps;
        problem.eta = cfg.eta;
        problem.k_max = cfg.k_max;
        problem.mu_min = cfg.mu_bracket.first;
        problem.mu_max = cfg.mu_bracket.second;

        SolveReport report = solve_kron(problem, &inst.x_true);

        ResultRow row;
        row.regularizer_label = reg.label;
        row.noise_level = nu;
        row.seed = seed;
        row.k = report.k_used;
        row.mu = report.mu;
        row.discrepancy_residual = report.discrepancy_residual;
        row.relative_error = report.relative_error.value_or(0.0);
        row.wall_seconds = report.wall_seconds;
        row.converged = report.converged;
        row.eps = inst.setup.eps;
        row.saturated = report.saturated;
        rows.push_back(row);

        write_pgm(report.x_solution,
                  fs::path(cfg.output_dir) / (tag + "_" + reg.label + "_solution.pgm"));
      }
    }
  }

  std::ofstream csv(fs::path(cfg.output_dir) / "results.csv", std::ios::binary);
  if (!csv) throw io_error("run: cannot write results.csv under " + cfg.output_dir);
  csv << csv_string(rows);
  return rows;
}

inline ExperimentConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw io_error("cannot open config file: " + path.string());
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw config_error(std::string("invalid JSON in config: ") + e.what());
  }
  return parse_config(j);
}

}  // namespace kronreg
