#include "pvar/jumps.hpp"

#include <algorithm>
#include <cmath>

#include "pvar/errors.hpp"
#include "pvar/stable_sampling.hpp"

namespace pvar {

JumpRecord JumpRecord::restrict_to(double a, double b) const {
  JumpRecord out;
  out.t0 = a;
  out.t1 = b;
  for (std::size_t m = 0; m < times.size(); ++m) {
    if (times[m] > a && times[m] <= b) {
      out.times.push_back(times[m]);
      out.sizes.push_back(sizes[m]);
    }
  }
  return out;
}

void JumpRecord::validate() const {
  if (times.size() != sizes.size())
    throw domain_error("JumpRecord: times/sizes length mismatch");
  if (!(t0 < t1)) throw domain_error("JumpRecord: need t0 < t1");
  for (std::size_t m = 0; m < times.size(); ++m) {
    if (!(times[m] > t0 && times[m] < t1))
      throw domain_error("JumpRecord: jump time outside (t0,t1)");
    if (m > 0 && !(times[m] > times[m - 1]))
      throw domain_error("JumpRecord: jump times not strictly increasing");
    if (sizes[m] == 0.0) throw domain_error("JumpRecord: zero jump size");
  }
}

double sample_jump_size(const JumpLawConfig& law, CounterRng& rng) {
  const double sign = rng.uniform01() < 0.5 ? -1.0 : 1.0;
  switch (law.law) {
    case JumpSizeLaw::kTwoPoint:
      return sign * law.a;
    case JumpSizeLaw::kSymmetricPareto:
      return sign * law.x_min *
             std::pow(rng.uniform01(), -1.0 / law.theta_index);
    case JumpSizeLaw::kTruncatedStable: {
      // Rejection against the truncation bound; acceptance probability is
      // bounded away from zero for any sane (beta_js, sigma_js, bound).
      for (int tries = 0; tries < 100000; ++tries) {
        double j = sample_sas(law.beta_js, law.sigma_js, rng);
        if (std::abs(j) <= law.bound && j != 0.0) return j;
      }
      throw tolerance_error(
          "sample_jump_size: truncated-stable rejection failed; bound too "
          "small relative to sigma_js");
    }
  }
  throw domain_error("sample_jump_size: unknown law");
}

JumpRecord sample_jumps(double lambda, const JumpLawConfig& law, double t0,
                        double t1, CounterRng& rng) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw domain_error("sample_jumps: lambda must be finite and >= 0");
  if (!(t0 < t1)) throw domain_error("sample_jumps: need t0 < t1");
  if (law.law == JumpSizeLaw::kSymmetricPareto && !(law.theta_index > 2.0))
    throw domain_error(
        "sample_jumps: symmetric-Pareto sizes need tail index > 2 so the "
        "driver has finite variance");

  JumpRecord rec;
  rec.t0 = t0;
  rec.t1 = t1;
  const std::uint64_t n = rng.poisson(lambda * (t1 - t0));
  rec.times.resize(n);
  for (auto& t : rec.times) t = rng.uniform(t0, t1);
  std::sort(rec.times.begin(), rec.times.end());
  // Ties have probability zero; nudge defensively if the generator ever
  // produces one so the strict-ordering invariant holds.
  for (std::size_t m = 1; m < rec.times.size(); ++m)
    if (rec.times[m] <= rec.times[m - 1])
      rec.times[m] = std::nextafter(rec.times[m - 1], t1);
  rec.sizes.resize(n);
  for (auto& j : rec.sizes) j = sample_jump_size(law, rng);
  rec.validate();
  return rec;
}

double jump_size_second_moment(const JumpLawConfig& law) {
  switch (law.law) {
    case JumpSizeLaw::kTwoPoint:
      return law.a * law.a;
    case JumpSizeLaw::kSymmetricPareto:
      if (!(law.theta_index > 2.0))
        throw domain_error("jump_size_second_moment: Pareto index <= 2");
      return law.x_min * law.x_min * law.theta_index / (law.theta_index - 2.0);
    case JumpSizeLaw::kTruncatedStable:
      throw domain_error(
          "jump_size_second_moment: no closed form for truncated stable; "
          "estimate empirically");
  }
  throw domain_error("jump_size_second_moment: unknown law");
}

std::string to_string(JumpSizeLaw law) {
  switch (law) {
    case JumpSizeLaw::kTwoPoint: return "two_point";
    case JumpSizeLaw::kSymmetricPareto: return "symmetric_pareto";
    case JumpSizeLaw::kTruncatedStable: return "truncated_stable";
  }
  return "unknown";
}

JumpSizeLaw jump_law_from_string(const std::string& s) {
  if (s == "two_point") return JumpSizeLaw::kTwoPoint;
  if (s == "symmetric_pareto") return JumpSizeLaw::kSymmetricPareto;
  if (s == "truncated_stable") return JumpSizeLaw::kTruncatedStable;
  throw config_error("unknown jump size law: " + s);
}

}  // namespace pvar
