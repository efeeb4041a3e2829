#include "bellcert/structure.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace bellcert {

namespace {

struct Evaluators {
  std::function<double(const Setting&)> quantum;
  std::function<double(const Setting&)> cls;
};

Evaluators make_evaluators(const BellExpression& expr, const PartitionClass& cls) {
  expr.validate();
  Evaluators ev;
  ev.quantum = [expr](const Setting& s) { return expr.factor * mk_quantum_bound(s, expr.t); };
  switch (expr.preset) {
    case Preset::CHSH:
      ev.cls = [](const Setting& s) {
        return chsh_bounds(s.cosines[0], s.cosines[1]).class_bounds.at("11");
      };
      return ev;
    case Preset::MERMIN3:
      if (cls.kind == PartitionClass::Kind::TwoSeparable) {
        ev.cls = [](const Setting& s) {
          return mermin3_bounds(s.cosines[0], s.cosines[1], s.cosines[2])
              .class_bounds.at("21");
        };
      } else if (cls.kind == PartitionClass::Kind::FullProduct) {
        ev.cls = [](const Setting& s) {
          return mermin3_bounds(s.cosines[0], s.cosines[1], s.cosines[2])
              .class_bounds.at("111");
        };
      }
      break;
    case Preset::F3_PLUS_F3PRIME:
      if (cls.kind == PartitionClass::Kind::TwoSeparable) {
        ev.cls = [](const Setting& s) {
          return f3sum_bounds(s.cosines[0], s.cosines[1], s.cosines[2])
              .class_bounds.at("21");
        };
      } else if (cls.kind == PartitionClass::Kind::FullProduct) {
        ev.cls = [](const Setting& s) {
          return f3sum_full_product_bound(s.cosines[0], s.cosines[1], s.cosines[2]);
        };
      }
      break;
    case Preset::MK_GENERAL:
      if (cls.kind == PartitionClass::Kind::TwoSeparable) {
        ev.cls = [expr](const Setting& s) {
          return expr.factor * mk_two_separable_bound(s, expr.t);
        };
      }
      break;
  }
  if (!ev.cls) {
    throw UsageError("structure function unavailable for " + expr.name() + "/" +
                     cls.label(expr.n));
  }
  return ev;
}

/// Solve U(omega with coordinate j set to x) = v for x in [-1, 1].
/// Returns false when no root is bracketed.
bool project_coordinate(Setting& s, int j, double v,
                        const std::function<double(const Setting&)>& quantum) {
  auto g = [&](double x) {
    const double saved = s.cosines[j];
    s.cosines[j] = x;
    const double val = quantum(s) - v;
    s.cosines[j] = saved;
    return val;
  };
  constexpr int kScan = 48;
  double prev_x = -1.0, prev_g = g(-1.0);
  double lo = 0.0, hi = 0.0;
  bool found = false;
  double best_x = s.cosines[j];
  double best_abs = std::abs(g(s.cosines[j]));
  for (int i = 1; i <= kScan; ++i) {
    const double x = -1.0 + 2.0 * i / kScan;
    const double gx = g(x);
    if (std::abs(gx) < best_abs) {
      best_abs = std::abs(gx);
      best_x = x;
    }
    if ((prev_g <= 0.0 && gx >= 0.0) || (prev_g >= 0.0 && gx <= 0.0)) {
      // Prefer the bracket closest to the current coordinate.
      if (!found || std::abs(0.5 * (prev_x + x) - s.cosines[j]) <
                        std::abs(0.5 * (lo + hi) - s.cosines[j])) {
        lo = prev_x;
        hi = x;
        found = true;
      }
    }
    prev_x = x;
    prev_g = gx;
  }
  if (!found) {
    if (best_abs < 1e-12) {
      s.cosines[j] = best_x;
      return true;
    }
    return false;
  }
  double glo = g(lo);
  for (int it = 0; it < 90; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double gm = g(mid);
    if ((glo <= 0.0) == (gm <= 0.0)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
    }
  }
  s.cosines[j] = 0.5 * (lo + hi);
  return true;
}

constexpr double kFeasible = 1e-9;

/// Tries to land `s` exactly on U(s) = v: single-coordinate projection
/// first, then deterministic off-degeneracy nudges (corners of the cube pin
/// U and leave no single-coordinate root).
bool restore_constraint(Setting& s, double v, const Evaluators& ev, int n) {
  for (int j = 0; j < n; ++j) {
    Setting trial = s;
    if (project_coordinate(trial, j, v, ev.quantum) &&
        std::abs(ev.quantum(trial) - v) <= kFeasible) {
      s = trial;
      return true;
    }
  }
  for (double delta : {0.05, -0.05, 0.2, -0.2, 0.5, -0.5, 1.0, -1.0}) {
    for (int j = 0; j < n; ++j) {
      for (int jp = 0; jp < n; ++jp) {
        if (jp == j) continue;
        Setting trial = s;
        trial.cosines[j] = std::clamp(trial.cosines[j] + delta, -1.0, 1.0);
        if (project_coordinate(trial, jp, v, ev.quantum) &&
            std::abs(ev.quantum(trial) - v) <= kFeasible) {
          s = trial;
          return true;
        }
      }
    }
  }
  return false;
}

/// Deterministic pattern search along the constraint surface U = v.
/// Only feasible points (projected back onto the constraint) compete.
bool polish_from(const Setting& start, double v, const Evaluators& ev, int n,
                 StructureRow& out) {
  Setting best = start;
  if (!restore_constraint(best, v, ev, n)) return false;
  double best_f = ev.cls(best);

  for (double h = 0.1; h > 2e-7; h *= 0.35) {
    for (int pass = 0; pass < 8; ++pass) {
      bool improved = false;
      for (int j = 0; j < n; ++j) {
        for (double sign : {1.0, -1.0}) {
          Setting trial = best;
          trial.cosines[j] = std::clamp(trial.cosines[j] + sign * h, -1.0, 1.0);
          for (int jp = 0; jp < n; ++jp) {
            if (jp == j) continue;
            Setting proj = trial;
            if (!project_coordinate(proj, jp, v, ev.quantum)) continue;
            if (std::abs(ev.quantum(proj) - v) > kFeasible) continue;
            const double f = ev.cls(proj);
            if (f > best_f + 1e-14) {
              best = proj;
              best_f = f;
              improved = true;
            }
          }
        }
      }
      if (!improved) break;
    }
  }

  out.v = v;
  out.f = best_f;
  out.omega = best.cosines;
  out.residual = std::abs(ev.quantum(best) - v);
  return true;
}

}  // namespace

double StructureTable::worst_residual() const {
  double w = 0.0;
  for (const auto& r : rows) w = std::max(w, r.residual);
  return w;
}

std::vector<double> default_v_grid(const BellExpression& expr, const PartitionClass& cls,
                                   int points) {
  if (points < 2) throw UsageError("v grid needs at least 2 points");
  double lo = 0.0, hi = expression_quantum_max(expr);
  switch (expr.preset) {
    case Preset::CHSH: lo = 2.0; break;
    case Preset::MERMIN3:
      lo = cls.kind == PartitionClass::Kind::TwoSeparable ? 2.0 * M_SQRT2 : 2.0;
      break;
    case Preset::F3_PLUS_F3PRIME: lo = 4.0; break;
    case Preset::MK_GENERAL:
      lo = 0.75 * hi;
      break;
  }
  std::vector<double> grid(points);
  for (int i = 0; i < points; ++i) grid[i] = lo + (hi - lo) * i / (points - 1);
  return grid;
}

StructureTable compute_structure_fn(const BellExpression& expr, const PartitionClass& cls,
                                    const std::vector<double>& v_grid,
                                    int omega_resolution, double band) {
  if (v_grid.empty()) throw UsageError("empty v grid");
  if (omega_resolution < 3) throw UsageError("omega resolution too small");
  const int n = expr.n;
  const Evaluators ev = make_evaluators(expr, cls);
  const double qmax = expression_quantum_max(expr);
  for (double v : v_grid) {
    if (v > qmax + 1e-9 || v < -1e-9) {
      throw UsageError("v grid value " + std::to_string(v) +
                       " outside the attainable quantum range [0, " +
                       std::to_string(qmax) + "]");
    }
  }

  // Coarse selection band: wide enough that the omega grid cannot starve a
  // v bin; the polish step restores |U - v| to ~1e-12 afterwards.
  const double coarse_band = std::max(band, 6.0 / omega_resolution);

  struct Candidate {
    double f = -std::numeric_limits<double>::infinity();
    Setting omega;
    bool set() const { return std::isfinite(f); }
  };
  struct BinState {
    Candidate near;     // best f within the coarse band
    Candidate in_band;  // best f within the tight band
    double closest_gap = std::numeric_limits<double>::infinity();
    Setting closest;
  };
  std::vector<BinState> bins(v_grid.size());

  std::vector<int> idx(n, 0);
  Setting s;
  s.cosines.assign(n, -1.0);
  while (true) {
    for (int j = 0; j < n; ++j) {
      s.cosines[j] = -1.0 + 2.0 * idx[j] / (omega_resolution - 1);
    }
    const double u = ev.quantum(s);
    double fval = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t b = 0; b < v_grid.size(); ++b) {
      const double gap = std::abs(u - v_grid[b]);
      if (gap < bins[b].closest_gap) {
        bins[b].closest_gap = gap;
        bins[b].closest = s;
      }
      if (gap > coarse_band) continue;
      if (std::isnan(fval)) fval = ev.cls(s);
      // strict >: the lexicographically first omega wins ties
      if (fval > bins[b].near.f) bins[b].near = {fval, s};
      if (gap <= band && fval > bins[b].in_band.f) bins[b].in_band = {fval, s};
    }
    int j = n - 1;
    while (j >= 0) {
      if (++idx[j] < omega_resolution) break;
      idx[j] = 0;
      --j;
    }
    if (j < 0) break;
  }

  StructureTable table;
  table.expression = expr.name();
  table.cls = cls.label(n);
  table.omega_resolution = omega_resolution;
  table.band = band;
  for (std::size_t b = 0; b < v_grid.size(); ++b) {
    const BinState& bin = bins[b];
    if (!bin.near.set() && !bin.in_band.set()) {
      std::ostringstream os;
      os << "no omega-grid point within " << coarse_band << " of v = " << v_grid[b]
         << "; increase --omega-res or the band";
      throw GridError(os.str());
    }
    // Polish from every coarse candidate that can be restored onto the
    // constraint; infeasible starts (degenerate cube corners) are skipped.
    StructureRow row;
    bool have_row = false;
    std::vector<const Setting*> starts;
    if (bin.near.set()) starts.push_back(&bin.near.omega);
    if (bin.in_band.set()) starts.push_back(&bin.in_band.omega);
    starts.push_back(&bin.closest);
    for (const Setting* start : starts) {
      StructureRow attempt;
      if (!polish_from(*start, v_grid[b], ev, n, attempt)) continue;
      if (!have_row || attempt.f > row.f) {
        row = attempt;
        have_row = true;
      }
    }
    if (!have_row || row.residual > band) {
      std::ostringstream os;
      os << "could not polish any candidate onto v = " << v_grid[b]
         << " within the band " << band << "; grid too coarse";
      throw GridError(os.str());
    }
    table.rows.push_back(std::move(row));
  }
  std::sort(table.rows.begin(), table.rows.end(),
            [](const StructureRow& a, const StructureRow& b) { return a.v < b.v; });
  return table;
}

ShapeReport audit_shape(const StructureTable& table, double tol) {
  const auto& rows = table.rows;
  if (rows.size() < 8) throw UsageError("audit needs a table with at least 8 rows");
  ShapeReport rep;
  rep.tol = tol;
  int worst_monotone = -1, worst_concavity = -1;
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    const double rise = rows[i + 1].f - rows[i].f;
    if (rise > rep.max_monotone_violation) {
      rep.max_monotone_violation = rise;
      worst_monotone = static_cast<int>(i + 1);
    }
  }
  // Midpoint concavity over index pairs whose middle row sits at the
  // v-midpoint (all equal-parity pairs on a uniform grid).
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = i + 2; j < rows.size(); j += 2) {
      const std::size_t m = (i + j) / 2;
      if (std::abs(0.5 * (rows[i].v + rows[j].v) - rows[m].v) > 1e-9) continue;
      const double gap = 0.5 * (rows[i].f + rows[j].f) - rows[m].f;
      if (gap > rep.max_concavity_violation) {
        rep.max_concavity_violation = gap;
        worst_concavity = static_cast<int>(m);
      }
    }
  }
  rep.worst_index = rep.max_monotone_violation >= rep.max_concavity_violation
                        ? worst_monotone
                        : worst_concavity;
  rep.pass = rep.max_monotone_violation <= tol && rep.max_concavity_violation <= tol;
  return rep;
}

Envelope::Envelope(std::vector<double> v, std::vector<double> f, double margin)
    : v_(std::move(v)), f_(std::move(f)), margin_(margin) {
  if (v_.size() != f_.size() || v_.size() < 2) {
    throw UsageError("envelope needs matching v/f arrays with >= 2 points");
  }
}

double Envelope::operator()(double v) const {
  if (v < v_.front() - 1e-9) {
    throw UsageError("envelope query below the sampled domain");
  }
  if (v >= v_.back()) return f_.back() + margin_;  // f decreasing: still an upper bound
  const auto it = std::upper_bound(v_.begin(), v_.end(), v);
  const std::size_t hi = std::min<std::size_t>(it - v_.begin(), v_.size() - 1);
  const std::size_t lo = hi == 0 ? 0 : hi - 1;
  return std::max(f_[lo], f_[hi]) + margin_;
}

Envelope conservative_envelope(const StructureTable& table, const ShapeReport& audit) {
  if (!audit.pass) {
    throw UsageError("conservative_envelope requires a table that passed audit_shape");
  }
  std::vector<double> v, f;
  for (const auto& row : table.rows) {
    v.push_back(row.v);
    f.push_back(row.f);
  }
  const double margin = std::max(table.worst_residual(), 1e-9);
  return Envelope(std::move(v), std::move(f), margin);
}

namespace {
std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}
}  // namespace

void write_structure_csv(const StructureTable& table, std::ostream& os) {
  const std::size_t n = table.rows.empty() ? 0 : table.rows.front().omega.size();
  os << "v,f";
  for (std::size_t j = 0; j < n; ++j) os << ",omega_" << j;
  os << ",residual\n";
  for (const auto& row : table.rows) {
    os << fmt17(row.v) << "," << fmt17(row.f);
    for (double c : row.omega) os << "," << fmt17(c);
    os << "," << fmt17(row.residual) << "\n";
  }
}

StructureTable read_structure_csv(std::istream& is) {
  StructureTable table;
  std::string line;
  if (!std::getline(is, line)) throw UsageError("empty structure CSV");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header.size() < 3 || header.front() != "v" || header[1] != "f" ||
      header.back() != "residual") {
    throw UsageError("structure CSV header must be v,f,omega...,residual");
  }
  const std::size_t n = header.size() - 3;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
    if (vals.size() != header.size()) throw UsageError("structure CSV row width mismatch");
    StructureRow row;
    row.v = vals[0];
    row.f = vals[1];
    row.omega.assign(vals.begin() + 2, vals.begin() + 2 + n);
    row.residual = vals.back();
    table.rows.push_back(std::move(row));
  }
  if (table.rows.empty()) throw UsageError("structure CSV has no data rows");
  return table;
}

}  // namespace bellcert
