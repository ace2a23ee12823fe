#include "pvar/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>

#include "pvar/constants.hpp"
#include "pvar/errors.hpp"
#include "pvar/quadrature.hpp"
#include "pvar/stable_sampling.hpp"

namespace pvar {
namespace {

bool is_pow2(long v) { return v > 0 && (v & (v - 1)) == 0; }

long round_up_pow2(long v) {
  long r = 1;
  while (r < v) r <<= 1;
  return r;
}

// ---------------------------------------------------------------------------
// Lag ladder: a dyadically coarsening partition of the lag axis, in "base
// unit" coordinates (1 base unit = one grid step of the driving noise).
// The finest cells have width 1/m; widths double every 32 cells (so the
// relative width w/lag stays ~1/32) until an optional cap.  Cells of width
// < 1 are indexed on the fine lattice, cells of width >= 1 on the unit
// lattice, where sliding windows become prefix-sum differences.
// ---------------------------------------------------------------------------
struct LadderGroup {
  long a, w;      // start lag and width, in fine units (1/m)
  double weight;  // average kernel value over the lag cell
};
struct UnitGroup {
  long a, w;      // start lag and width, in base units
  double weight;
};
struct Ladder {
  int m = 1;
  long span = 0;  // covered lag range [0, span) in base units
  std::vector<LadderGroup> fine;
  std::vector<UnitGroup> units;
};

// avg(a_units, b_units) must return the average kernel value over the lag
// interval [a, b] in base units.
Ladder build_ladder(int m, long span, long width_cap_units,
                    const std::function<double(double, double)>& avg) {
  if (!is_pow2(m) || m > 4096)
    throw domain_error("lag ladder: m_sub must be a power of two <= 4096");
  if (span < 64) throw domain_error("lag ladder: span must be >= 64 units");
  Ladder lad;
  lad.m = m;
  lad.span = span;
  const long span_f = span * m;
  const long cap_f =
      width_cap_units > 0 ? width_cap_units * static_cast<long>(m) : span_f;

  long covered = 0;  // fine units
  long w = 1;        // current width, fine units
  bool first = true;
  while (covered < span_f) {
    const long level_end =
        first ? std::min(span_f, 64L * w)
              : std::min(span_f, covered + 32L * w);
    while (covered < level_end) {
      const long cw = std::min(w, level_end - covered);
      const double a_u = static_cast<double>(covered) / m;
      const double b_u = static_cast<double>(covered + cw) / m;
      const double wt = avg(a_u, b_u);
      if (w < m) {
        lad.fine.push_back(LadderGroup{covered, cw, wt});
      } else {
        lad.units.push_back(UnitGroup{covered / m, cw / m, wt});
      }
      covered += cw;
    }
    first = false;
    if (w < cap_f) w <<= 1;
  }
  return lad;
}

// ---------------------------------------------------------------------------
// Noise field: one fine prefix array near the evaluation window and one
// unit prefix array over the whole dense range.  Unit cells overlapping the
// fine range aggregate the fine noise exactly, so every resolution sees the
// same driver.
// ---------------------------------------------------------------------------
struct NoiseField {
  int m = 1;
  long fine_lo = 0, fine_hi = 0;  // fine prefix indices [fine_lo, fine_hi]
  long unit_lo = 0, unit_hi = 0;  // unit prefix positions [unit_lo, unit_hi]
  std::vector<double> FP, UP;

  double fp(long j) const { return FP[static_cast<std::size_t>(j - fine_lo)]; }
  double up(long v) const { return UP[static_cast<std::size_t>(v - unit_lo)]; }
};

// Fine cells cover base positions (fine_back_lo, t_hi]; unit cells cover
// (unit_back_lo, t_hi].  Draw order is fixed (fine ascending, then direct
// unit cells ascending) so replays are byte-identical.
NoiseField gen_noise(double beta, int m, long t_hi, long fine_back_lo,
                     long unit_back_lo, CounterRng& rng) {
  NoiseField nf;
  nf.m = m;
  nf.fine_lo = fine_back_lo * m;
  nf.fine_hi = t_hi * m;
  nf.unit_lo = unit_back_lo;
  nf.unit_hi = t_hi;

  const double fine_scale = std::pow(1.0 / m, 1.0 / beta);
  nf.FP.resize(static_cast<std::size_t>(nf.fine_hi - nf.fine_lo) + 1);
  nf.FP[0] = 0.0;
  for (long j = nf.fine_lo + 1; j <= nf.fine_hi; ++j)
    nf.FP[static_cast<std::size_t>(j - nf.fine_lo)] =
        nf.FP[static_cast<std::size_t>(j - 1 - nf.fine_lo)] +
        sample_sas(beta, fine_scale, rng);

  nf.UP.resize(static_cast<std::size_t>(nf.unit_hi - nf.unit_lo) + 1);
  nf.UP[0] = 0.0;
  for (long v = nf.unit_lo + 1; v <= nf.unit_hi; ++v) {
    double cell;
    if (v > fine_back_lo) {
      cell = nf.fp(v * m) - nf.fp((v - 1) * m);  // aggregate of fine cells
    } else {
      cell = sample_sas(beta, 1.0, rng);
    }
    nf.UP[static_cast<std::size_t>(v - nf.unit_lo)] =
        nf.UP[static_cast<std::size_t>(v - 1 - nf.unit_lo)] + cell;
  }
  return nf;
}

// Convolution sum_cells weight * noise(cell) of the ladder against the
// noise field at integer time t.  Unit cells reaching past the dense range
// are clamped, with the straddling cell re-weighted exactly over its
// covered lag sub-range.
double convolve_at(const Ladder& lad, const NoiseField& nf, long t,
                   const std::function<double(double, double)>& avg) {
  double acc = 0.0;
  const long tf = t * nf.m;
  for (const auto& g : lad.fine) {
    const long hi = tf - g.a;
    acc += g.weight * (nf.fp(hi) - nf.fp(hi - g.w));
  }
  for (const auto& g : lad.units) {
    const long hi = t - g.a;
    if (hi <= nf.unit_lo) break;  // this and every later cell is far field
    const long lo = hi - g.w;
    if (lo >= nf.unit_lo) {
      acc += g.weight * (nf.up(hi) - nf.up(lo));
    } else {
      const double wt = avg(static_cast<double>(g.a),
                            static_cast<double>(t - nf.unit_lo));
      acc += wt * (nf.up(hi) - nf.up(nf.unit_lo));
    }
  }
  return acc;
}

// Same, at a fine-lattice time t_num (in fine units).  The sub-unit part is
// exact; unit-and-coarser windows are snapped down to the unit lattice,
// which perturbs their lag by < 1 unit -- negligible for kernels whose mass
// sits at lags >> 1 unit (enforced by callers).
double convolve_at_fine(const Ladder& lad, const NoiseField& nf, long t_num,
                        const std::function<double(double, double)>& avg) {
  double acc = 0.0;
  for (const auto& g : lad.fine) {
    const long hi = t_num - g.a;
    acc += g.weight * (nf.fp(hi) - nf.fp(hi - g.w));
  }
  const long t_snap = t_num >= 0 ? t_num / nf.m
                                 : -((-t_num + nf.m - 1) / nf.m);
  for (const auto& g : lad.units) {
    const long hi = t_snap - g.a;
    if (hi <= nf.unit_lo) break;
    const long lo = hi - g.w;
    if (lo >= nf.unit_lo) {
      acc += g.weight * (nf.up(hi) - nf.up(lo));
    } else {
      const double wt = avg(static_cast<double>(g.a),
                            static_cast<double>(t_snap - nf.unit_lo));
      acc += wt * (nf.up(hi) - nf.up(nf.unit_lo));
    }
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Far-past polynomial representation for power kernels.  Beyond the dense
// range the kernel (t - v)^alpha (or its differences) is expanded in powers
// of t/(-v); the coefficients A_r = int_{v < -V_d} (-v)^{alpha - r} dL(v)
// are sampled jointly over geometric blocks, 32 per octave, out to V_max
// where the leading coefficient's stable norm has decayed below target.
// ---------------------------------------------------------------------------
struct FarPoly {
  std::vector<double> A;  // A[r], r = 0..R (r < r_min unused, zero)
  double cutoff_rel = 0.0;
};

FarPoly sample_far_poly(double alpha, double beta, int r_min, int R,
                        double V_d, double lead_decay_exponent, double far_tol,
                        CounterRng& rng) {
  FarPoly fp;
  fp.A.assign(static_cast<std::size_t>(R) + 1, 0.0);
  const double e1 = lead_decay_exponent;  // > 0, stable-norm decay of A_{r_min}
  const double target = far_tol * 0.1;
  const double octaves = std::ceil(std::log2(std::pow(10.0 / far_tol, 1.0 / e1)));
  const long nblocks = static_cast<long>(32.0 * std::max(1.0, octaves));
  const double q = std::pow(2.0, 1.0 / 32.0);

  double va = V_d;
  for (long b = 0; b < nblocks; ++b) {
    const double vb = va * q;
    const double width = vb - va;
    const double zeta = sample_sas(beta, std::pow(width, 1.0 / beta), rng);
    for (int r = r_min; r <= R; ++r) {
      const double e = alpha - r + 1.0;
      double wbar;
      if (std::abs(e) > 1e-12) {
        wbar = (std::pow(vb, e) - std::pow(va, e)) / (e * width);
      } else {
        wbar = std::log(vb / va) / width;
      }
      fp.A[static_cast<std::size_t>(r)] += wbar * zeta;
    }
    va = vb;
  }
  fp.cutoff_rel = target;
  return fp;
}

double pow_int(double x, int r) {
  double acc = 1.0;
  for (int j = 0; j < r; ++j) acc *= x;
  return acc;
}

double binom_real(double alpha, int r) {
  double acc = 1.0;
  for (int j = 0; j < r; ++j) acc *= (alpha - j) / (j + 1);
  return acc;
}

// Heuristic relative bound on the discretization of the marginal law:
// sub-lattice bias of the singular cell + polynomial remainder + far cutoff.
double lattice_bias_estimate(double alpha, double beta, int m) {
  return 0.05 * std::pow(static_cast<double>(m), -(1.0 + alpha * beta));
}

// ---------------------------------------------------------------------------
// Fractional (pure power, stationary increments) stable path.
// ---------------------------------------------------------------------------
SamplePath fractional_stable_path(const KernelSpec& spec, double beta,
                                  double sigma, int n, SeedStream stream,
                                  const StablePathOptions& opt) {
  const double alpha = spec.alpha;
  if (!(beta > 1.0) || beta > 2.0)
    throw domain_error(
        "stable path: fractional kernels need beta in (1,2] so the moving "
        "average exists");
  if (!(alpha < 1.0 - 1.0 / beta))
    throw domain_error(
        "stable path: alpha < 1 - 1/beta violated; the pure-power "
        "stationary-increments process has no L^beta representation");
  if (n < 1) throw domain_error("stable path: n must be >= 1");

  const int m = opt.m_sub;
  const long span = std::max<long>(64, round_up_pow2(4L * n));
  const long V_d = span - n;  // dense noise reaches back to -V_d

  auto avg = [alpha](double a, double b) {
    return (h_k_antiderivative(b, alpha, 1) - h_k_antiderivative(a, alpha, 1)) /
           (b - a);
  };
  Ladder lad = build_ladder(m, span, 0, avg);

  CounterRng rng(stream);
  NoiseField nf = gen_noise(beta, m, n, -64, -V_d, rng);

  const int R = opt.poly_order;
  const double e1 = 1.0 - alpha - 1.0 / beta;
  FarPoly far = sample_far_poly(alpha, beta, 1, R, static_cast<double>(V_d),
                                e1, opt.far_tol, rng);
  std::vector<double> B(static_cast<std::size_t>(R) + 1, 0.0);
  for (int r = 1; r <= R; ++r)
    B[static_cast<std::size_t>(r)] =
        binom_real(alpha, r) * far.A[static_cast<std::size_t>(r)];

  SamplePath path;
  path.n = n;
  path.kernel = spec;
  path.driver = DriverDescriptor{"stable", beta, sigma, 0.0, stream};
  path.values.assign(static_cast<std::size_t>(n) + 1, 0.0);

  const double scale =
      spec.c0 * sigma * std::pow(static_cast<double>(n), -(alpha + 1.0 / beta));
  double cum = 0.0;
  for (long i = 1; i <= n; ++i) {
    cum += convolve_at(lad, nf, i, avg);
    // Far-past Taylor part of the partial sum, Horner in i.
    double poly = 0.0;
    for (int r = R; r >= 1; --r)
      poly = (poly + B[static_cast<std::size_t>(r)]) * static_cast<double>(i);
    path.values[static_cast<std::size_t>(i)] = scale * (cum + poly);
  }

  const double poly_rem =
      std::pow(static_cast<double>(n) / static_cast<double>(V_d),
               R + 1);
  path.truncation_error_bound =
      poly_rem + far.cutoff_rel + lattice_bias_estimate(alpha, beta, m);
  return path;
}

// ---------------------------------------------------------------------------
// Stationary path for decaying kernels (exponential-factor or table), with
// a hard truncation of the kernel at t_trunc in original time.
// ---------------------------------------------------------------------------
double kernel_display_tail_rel(const KernelSpec& spec, double beta, double T) {
  // Relative L^beta mass of g beyond lag T; used for the refusal bound.
  auto f = [&spec, beta](double t) {
    return std::pow(std::abs(g_eval(spec, t)), beta);
  };
  const double far_end =
      spec.family == KernelFamily::kTableDefined
          ? spec.table_x.back()
          : T + 60.0 / std::max(spec.decay_rate * beta, 0.2);
  QuadResult total = integrate(f, 0.0, far_end, 1e-14, 1e-9, 400000);
  if (T >= far_end) return 0.0;
  QuadResult tail = integrate(f, T, far_end, 1e-14, 1e-9, 400000);
  if (!(total.value > 0.0))
    throw domain_error("stable path: kernel has zero L^beta mass");
  return std::pow(tail.value / total.value, 1.0 / beta);
}

SamplePath stationary_stable_path(const KernelSpec& spec, double beta,
                                  double sigma, int n, SeedStream stream,
                                  const StablePathOptions& opt,
                                  Ladder* f_ladder_out, NoiseField* nf_out,
                                  Ladder* ladder_out) {
  if (!(beta > 0.0) || beta > 2.0)
    throw domain_error("stable path: beta must lie in (0,2]");
  if (n < 1) throw domain_error("stable path: n must be >= 1");

  // Pick the truncation window: the caller's t_trunc, enlarged if needed
  // until the kernel's relative L^beta tail meets far_tol.
  double T = std::max(opt.t_trunc, 1.0);
  double tail_rel = kernel_display_tail_rel(spec, beta, T);
  while (tail_rel > opt.far_tol && T < 256.0) {
    T *= 2.0;
    tail_rel = kernel_display_tail_rel(spec, beta, T);
  }
  if (tail_rel > opt.far_tol) {
    char msg[256];
    std::snprintf(msg, sizeof msg,
                  "stable path: kernel tail beyond t_trunc=%.3g has relative "
                  "L^beta mass %.3g > far_tol=%.3g; no window up to 256 "
                  "suffices",
                  T, tail_rel, opt.far_tol);
    throw tolerance_error(msg);
  }

  const int m = opt.m_sub;
  const long span = std::max<long>(64, round_up_pow2(
                                           static_cast<long>(std::ceil(T * n))));
  long cap = 0;
  if (spec.family == KernelFamily::kPowerTimesExpDecay) {
    cap = std::max<long>(
        1, static_cast<long>(static_cast<double>(n) /
                             (8.0 * spec.decay_rate)));
  } else if (spec.family == KernelFamily::kTableDefined) {
    double min_dx = 1e300;
    for (std::size_t i = 1; i < spec.table_x.size(); ++i)
      min_dx = std::min(min_dx, spec.table_x[i] - spec.table_x[i - 1]);
    cap = std::max<long>(1, static_cast<long>(min_dx * n));
  }

  const double dn = static_cast<double>(n);
  // Average of g over a lag cell given in base (1/n) units: 4-point
  // Gauss-Legendre, exact for the cubic table interpolant and ~1e-10
  // relative for the analytic family at the ladder's width/lag ratio.
  auto avg = [&spec, dn](double a, double b) {
    static const double gx[4] = {-0.8611363115940526, -0.3399810435848563,
                                 0.3399810435848563, 0.8611363115940526};
    static const double gw[4] = {0.3478548451374539, 0.6521451548625461,
                                 0.6521451548625461, 0.3478548451374539};
    const double ta = a / dn, tb = b / dn;
    const double mid = 0.5 * (ta + tb), half = 0.5 * (tb - ta);
    double acc = 0.0;
    for (int q = 0; q < 4; ++q)
      acc += gw[q] * g_eval(spec, mid + half * gx[q]);
    return 0.5 * acc;
  };
  Ladder lad = build_ladder(m, span, cap, avg);

  CounterRng rng(stream);
  NoiseField nf = gen_noise(beta, m, n, -64, -span, rng);

  SamplePath path;
  path.n = n;
  path.kernel = spec;
  path.driver = DriverDescriptor{"stable", beta, sigma, 0.0, stream};
  path.values.assign(static_cast<std::size_t>(n) + 1, 0.0);
  const double scale = sigma * std::pow(dn, -1.0 / beta);

  // Increment kernel in lag units: delta(x) = g(x/n) - g((x-1)/n).  Its
  // exact cell averages reduce to (differences of) g cell averages, with a
  // split where the shifted copy switches on.
  auto avg_diff = [&avg](double a, double b) {
    if (b <= 1.0) return avg(a, b);
    if (a >= 1.0) return avg(a, b) - avg(a - 1.0, b - 1.0);
    const double m1 = avg(a, 1.0) * (1.0 - a);
    const double m2 = (avg(1.0, b) - avg(0.0, b - 1.0)) * (b - 1.0);
    return (m1 + m2) / (b - a);
  };
  Ladder dlad = build_ladder(m, span, cap, avg_diff);

  // X_0 comes from the value ladder; successive values accumulate directly
  // convolved increments.  Differencing two value convolutions instead would
  // cancel every weight interior to a lag cell and leave only cell-boundary
  // noise, inflating small increments by the cell width.
  double cum = scale * convolve_at(lad, nf, 0, avg);
  path.values[0] = cum;
  for (long i = 1; i <= n; ++i) {
    cum += scale * convolve_at(dlad, nf, i, avg_diff);
    path.values[static_cast<std::size_t>(i)] = cum;
  }
  if (spec.g0_mode == G0Mode::kEqualG) {
    const double x0 = path.values[0];
    for (auto& v : path.values) v -= x0;
  }
  path.truncation_error_bound =
      tail_rel + lattice_bias_estimate(std::min(spec.alpha, 1.0), beta, m);

  if (ladder_out) *ladder_out = std::move(lad);
  if (nf_out) *nf_out = std::move(nf);
  if (f_ladder_out) {
    // Derivative-kernel weights on the identical geometry: the average of
    // g' over a cell is the exact difference quotient of g.
    auto avg_deriv = [&spec, dn](double a, double b) {
      return (g_eval(spec, b / dn) - g_eval(spec, a / dn)) / ((b - a) / dn);
    };
    *f_ladder_out = build_ladder(m, span, cap, avg_deriv);
  }
  return path;
}

}  // namespace

SamplePath simulate_cp_driven_path(const KernelSpec& spec,
                                   const JumpRecord& record, int n) {
  spec.validate();
  record.validate();
  if (n < 1) throw domain_error("simulate_cp_driven_path: n must be >= 1");
  SamplePath path;
  path.n = n;
  path.kernel = spec;
  path.driver.type = "compound_poisson";
  path.jumps = record;
  path.values.assign(static_cast<std::size_t>(n) + 1, 0.0);
  for (int i = 0; i <= n; ++i) {
    const double t = static_cast<double>(i) / n;
    double acc = 0.0;
    for (std::size_t mj = 0; mj < record.times.size(); ++mj) {
      double w = g_eval(spec, t - record.times[mj]);
      if (spec.g0_mode == G0Mode::kEqualG)
        w -= g_eval(spec, -record.times[mj]);
      acc += w * record.sizes[mj];
    }
    path.values[static_cast<std::size_t>(i)] = acc;
  }
  path.truncation_error_bound = 0.0;  // exact functional of the record
  return path;
}

SamplePath simulate_stable_driven_path(const KernelSpec& spec, double beta,
                                       double sigma, int n, SeedStream stream,
                                       const StablePathOptions& opt) {
  spec.validate();
  if (!(sigma > 0.0))
    throw domain_error("simulate_stable_driven_path: sigma must be > 0");
  if (spec.family == KernelFamily::kPurePower) {
    if (spec.g0_mode != G0Mode::kEqualG)
      throw domain_error(
          "simulate_stable_driven_path: pure power kernels are only "
          "admissible in the stationary-increments mode");
    return fractional_stable_path(spec, beta, sigma, n, stream, opt);
  }
  return stationary_stable_path(spec, beta, sigma, n, stream, opt, nullptr,
                                nullptr, nullptr);
}

SamplePath simulate_tangent_lfsm(double alpha, double beta, double c0,
                                 double sigma, int n, SeedStream stream,
                                 const StablePathOptions& opt) {
  KernelSpec spec;
  spec.family = KernelFamily::kPurePower;
  spec.alpha = alpha;
  spec.c0 = c0;
  spec.g0_mode = G0Mode::kEqualG;
  return simulate_stable_driven_path(spec, beta, sigma, n, stream, opt);
}

LimitSample simulate_limit_Z(const KernelSpec& spec, const JumpRecord& record,
                             double p, int k, CounterRng& rng,
                             const std::vector<double>* forced_marks,
                             double tol) {
  spec.validate();
  record.validate();
  const double alpha = spec.alpha;
  if (!((k - alpha) * p > 1.0))
    throw domain_error(
        "simulate_limit_Z: jump-regime condition alpha < k - 1/p violated; "
        "the mark series does not converge");

  JumpRecord inner = record.restrict_to(0.0, 1.0);
  if (forced_marks && forced_marks->size() != inner.times.size())
    throw domain_error(
        "simulate_limit_Z: forced_marks must match the jump count in (0,1]");

  LimitSample out;
  const double cp = std::pow(std::abs(spec.c0), p);
  HkEvaluator hk(alpha, k);

  for (std::size_t mj = 0; mj < inner.times.size(); ++mj) {
    const double u =
        forced_marks ? (*forced_marks)[mj] : rng.uniform01();
    if (!(u > 0.0 && u <= 1.0))
      throw domain_error("simulate_limit_Z: marks must lie in (0,1]");
    // V(u) = sum_l |h_k(l + u)|^p.  Terms decay like l^{-(k-alpha)p} with
    // exponent possibly barely above 1, so plain truncation cannot certify
    // tight tolerances.  Beyond L the summand is sandwiched between the
    // integral of |c (1 -+ d)|^p x^{(alpha-k)p} and the same plus the first
    // term, where d bounds the relative deviation of h_k from its power
    // asymptote on [L+u, inf).  The midpoint of the sandwich is added to the
    // sum and its half-width is the certified truncation error.
    const double s = (k - alpha) * p;
    const double c_lead = std::abs(h_k_decay_coefficient(alpha, k));
    double v = 0.0;
    long L = 64;
    double tail_err = 0.0;
    for (long l = 0;; ++l) {
      if (l >= L) {
        const double x0 = static_cast<double>(L) + u;
        double d = 0.0;
        for (double x : {x0, 2.0 * x0, 4.0 * x0, 8.0 * x0})
          d = std::max(d, std::abs(std::abs(hk(x)) *
                                       std::pow(x, static_cast<double>(k) -
                                                       alpha) /
                                       c_lead -
                                   1.0));
        d = std::min(1.5 * d, 1.0);  // deviation decays in x; margin for L+u
        const double integral = std::pow(x0, 1.0 - s) / (s - 1.0);
        const double first = std::pow(std::abs(hk(x0)), p);
        const double a_lo = std::pow(c_lead * (1.0 - d), p) * integral;
        const double a_hi = std::pow(c_lead * (1.0 + d), p) * integral + first;
        const double mid = 0.5 * (a_lo + a_hi);
        const double half = 0.5 * (a_hi - a_lo);
        if (half <= tol * std::max(v + mid, 1e-300)) {
          v += mid;
          tail_err = half;
          break;
        }
        if (L > (1L << 22))
          throw tolerance_error(
              "simulate_limit_Z: mark series tail does not certify at the "
              "requested tolerance");
        L *= 2;
      }
      v += std::pow(std::abs(hk(static_cast<double>(l) + u)), p);
    }
    const double term =
        cp * std::pow(std::abs(inner.sizes[mj]), p) * v;
    out.contributions.push_back(term);
    out.value += term;
    out.truncation_error_bound +=
        cp * std::pow(std::abs(inner.sizes[mj]), p) * tail_err;
  }
  return out;
}

std::vector<double> simulate_V_process(double alpha, double beta, int k,
                                       int len, SeedStream stream,
                                       const StablePathOptions& opt) {
  if (len < 1) throw domain_error("simulate_V_process: len must be >= 1");
  if (!((k - alpha) * beta > 1.0))
    throw domain_error(
        "simulate_V_process: requires (k - alpha) * beta > 1 for the "
        "moving average to exist");

  const int m = opt.m_sub;
  const long span = std::max<long>(64, round_up_pow2(4L * len));
  const long V_d = span - len;

  auto avg = [alpha, k](double a, double b) {
    return h_k_cell_average(a, b, alpha, k);
  };
  Ladder lad = build_ladder(m, span, 0, avg);

  CounterRng rng(stream);
  NoiseField nf = gen_noise(beta, m, len, -64, -V_d, rng);

  // Far field: only engaged when the kernel tail beyond the dense range is
  // non-negligible (slowly decaying first-difference kernels).
  const double c_lead = h_k_decay_coefficient(alpha, k);
  const double s = (k - alpha) * beta;
  double tail_frac = 0.0;
  if (c_lead != 0.0) {
    QuadResult nrm = hk_beta_norm(alpha, beta, k, 1e-9);
    tail_frac = std::pow(std::abs(c_lead), beta) *
                std::pow(static_cast<double>(V_d), 1.0 - s) / (s - 1.0) /
                nrm.value;
  }

  std::vector<double> vals(static_cast<std::size_t>(len) + 1, 0.0);
  const int R = std::max(opt.poly_order, k + 6);
  std::vector<double> far_contrib(static_cast<std::size_t>(len) + 1, 0.0);
  double cutoff_rel = 0.0;
  if (tail_frac > 1e-10) {
    const double e1 = (s - 1.0) / beta;  // stable-norm decay of A_k
    FarPoly far = sample_far_poly(alpha, beta, k, R,
                                  static_cast<double>(V_d), e1, opt.far_tol,
                                  rng);
    cutoff_rel = far.cutoff_rel;
    for (long t = 1; t <= len; ++t) {
      double acc = 0.0;
      for (int r = k; r <= R; ++r) {
        // q_r(t): k-th difference of t^r, vanishes for r < k.
        double qr = 0.0;
        for (int j = 0; j <= k; ++j) {
          const double sgn = (j % 2 == 0) ? 1.0 : -1.0;
          qr += sgn * binomial_exact(k, j) *
                pow_int(static_cast<double>(t - j), r);
        }
        acc += binom_real(alpha, r) * far.A[static_cast<std::size_t>(r)] * qr;
      }
      far_contrib[static_cast<std::size_t>(t)] = acc;
    }
  }

  for (long t = 1; t <= len; ++t)
    vals[static_cast<std::size_t>(t)] =
        convolve_at(lad, nf, t, avg) + far_contrib[static_cast<std::size_t>(t)];
  vals.erase(vals.begin());  // t = 1..len
  (void)cutoff_rel;
  return vals;
}

namespace {

double midpoint_abs_power_integral(const std::vector<double>& f, double p) {
  double acc = 0.0;
  for (double v : f) acc += std::pow(std::abs(v), p);
  return acc / static_cast<double>(f.size());
}

}  // namespace

FIntegralResult simulate_F_integral_cp(const KernelSpec& spec,
                                       const JumpRecord& record, double p,
                                       int k, int fine_n) {
  spec.validate();
  record.validate();
  if (fine_n < 2)
    throw domain_error("simulate_F_integral_cp: fine_n must be >= 2");
  if (spec.family == KernelFamily::kPurePower)
    throw tolerance_error(
        "simulate_F_integral_cp: pure power kernels have no square-summable "
        "k-th derivative over the infinite past, so no finite record window "
        "represents F; use a decaying kernel");

  // Far-past representability: the omitted mass (driver before the record)
  // must be negligible against the represented one, in L2 of the driver.
  {
    auto f2 = [&spec, k](double t) {
      const double d = g_deriv(spec, t, k);
      return d * d;
    };
    const double Tpast = -record.t0;
    const double far_end =
        spec.family == KernelFamily::kTableDefined
            ? spec.table_x.back()
            : Tpast + 80.0 / std::max(spec.decay_rate, 0.2);
    if (Tpast < far_end) {
      QuadResult whole = integrate(f2, 1e-9, far_end, 1e-13, 1e-8, 300000);
      QuadResult tail = integrate(f2, Tpast, far_end, 1e-13, 1e-8, 300000);
      const double rel = std::sqrt(tail.value / std::max(whole.value, 1e-300));
      if (rel > 0.02) {
        char msg[256];
        std::snprintf(msg, sizeof msg,
                      "simulate_F_integral_cp: record window T_past=%.3g "
                      "leaves relative L2 kernel mass %.3g > 0.02 in the "
                      "unrepresented past; enlarge the record window",
                      Tpast, rel);
        throw tolerance_error(msg);
      }
    }
  }

  FIntegralResult out;
  auto f_at = [&](double u) {
    double acc = 0.0;
    for (std::size_t mj = 0; mj < record.times.size(); ++mj) {
      if (record.times[mj] > u) break;
      acc += g_deriv(spec, u - record.times[mj], k) * record.sizes[mj];
    }
    return acc;
  };

  out.f_values.resize(static_cast<std::size_t>(fine_n));
  for (int j = 0; j < fine_n; ++j)
    out.f_values[static_cast<std::size_t>(j)] =
        f_at((j + 0.5) / static_cast<double>(fine_n));
  out.value = midpoint_abs_power_integral(out.f_values, p);

  std::vector<double> half(static_cast<std::size_t>(fine_n / 2));
  for (int j = 0; j < fine_n / 2; ++j)
    half[static_cast<std::size_t>(j)] =
        f_at((j + 0.5) / static_cast<double>(fine_n / 2));
  out.grid_error_estimate =
      std::abs(out.value - midpoint_abs_power_integral(half, p));
  out.truncation_error_bound = 0.0;
  return out;
}

SmoothPair simulate_smooth_pair_stable(const KernelSpec& spec, double beta,
                                       double sigma, int n, int fine_n,
                                       double p, int k, SeedStream stream,
                                       const StablePathOptions& opt) {
  spec.validate();
  if (spec.family == KernelFamily::kPurePower)
    throw tolerance_error(
        "simulate_smooth_pair_stable: pure power kernels are outside the "
        "smooth regime; use a decaying kernel");
  if (k != 1)
    throw domain_error(
        "simulate_smooth_pair_stable: only first differences (k = 1) are "
        "supported for the coupled smooth comparison");
  const long ratio = static_cast<long>(n) * opt.m_sub / fine_n;
  if (static_cast<long>(n) * opt.m_sub != ratio * fine_n || ratio % 2 != 0)
    throw config_error(
        "simulate_smooth_pair_stable: fine_n must divide n * m_sub with an "
        "even quotient so F lands on the noise lattice");

  SmoothPair pair;
  Ladder lad, f_lad;
  NoiseField nf;
  pair.path = stationary_stable_path(spec, beta, sigma, n, stream, opt, &f_lad,
                                     &nf, &lad);

  const double dn = static_cast<double>(n);
  auto avg_deriv = [&spec, dn](double a, double b) {
    return (g_eval(spec, b / dn) - g_eval(spec, a / dn)) / ((b - a) / dn);
  };
  const double scale = sigma * std::pow(dn, -1.0 / beta);

  auto f_at_index = [&](long t_num) {
    return scale * convolve_at_fine(f_lad, nf, t_num, avg_deriv);
  };

  FIntegralResult fi;
  fi.f_values.resize(static_cast<std::size_t>(fine_n));
  for (long j = 0; j < fine_n; ++j) {
    const long t_num = (2 * j + 1) * (ratio / 2);  // (j + 1/2) * ratio
    fi.f_values[static_cast<std::size_t>(j)] = f_at_index(t_num);
  }
  fi.value = midpoint_abs_power_integral(fi.f_values, p);

  std::vector<double> half(static_cast<std::size_t>(fine_n / 2));
  for (long j = 0; j < fine_n / 2; ++j)
    half[static_cast<std::size_t>(j)] = f_at_index((2 * j + 1) * ratio);
  fi.grid_error_estimate =
      std::abs(fi.value - midpoint_abs_power_integral(half, p));
  fi.truncation_error_bound = pair.path.truncation_error_bound;
  pair.f_integral = fi;
  return pair;
}

SmoothPair simulate_smooth_pair_cp(const KernelSpec& spec,
                                   const JumpRecord& record, int n, int fine_n,
                                   double p, int k) {
  SmoothPair pair;
  pair.path = simulate_cp_driven_path(spec, record, n);
  pair.f_integral = simulate_F_integral_cp(spec, record, p, k, fine_n);
  return pair;
}

void write_path_csv(const SamplePath& path, const std::string& file) {
  std::ofstream out(file);
  if (!out) throw config_error("write_path_csv: cannot open " + file);
  out << "# pvar-path v1\n";
  out << "i,t,x\n";
  char buf[96];
  for (int i = 0; i <= path.n; ++i) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g\n", i, path.t_of(i),
                  path.values[static_cast<std::size_t>(i)]);
    out << buf;
  }
}

void write_jumps_csv(const JumpRecord& record, const std::string& file) {
  std::ofstream out(file);
  if (!out) throw config_error("write_jumps_csv: cannot open " + file);
  out << "# pvar-jumps v1\n";
  out << "t,size\n";
  char buf[80];
  for (std::size_t m = 0; m < record.times.size(); ++m) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", record.times[m],
                  record.sizes[m]);
    out << buf;
  }
}

}  // namespace pvar
