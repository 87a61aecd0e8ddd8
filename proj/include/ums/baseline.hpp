#pragma once

// Single-move slice sampler for h_t (stepping-out and shrinkage), the
// comparator for the mixture sampler with alpha held fixed.

#include <cstddef>
#include <functional>

#include "ums/models.hpp"
#include "ums/rng.hpp"
#include "ums/sampler.hpp"
#include "ums/ssm.hpp"

namespace ums {

struct SliceOptions {
  double width = 1.0;
  int max_steps = 50;
  int max_shrinks = 200;
};

/// One slice-sampling update of a scalar with unnormalized log density
/// `log_f`. Returns x0 (and sets *failed) if the shrinkage does not land.
double slice_sample_1d(const std::function<double(double)>& log_f, double x0, Rng& rng,
                       const SliceOptions& options = {}, bool* failed = nullptr);

/// Gaussian full conditional of h_t given its neighbours under the AR(1)
/// prior with stationary start.
struct ConditionalPrior {
  double mean;
  double variance;
};
ConditionalPrior ar1_conditional(const LatentPath& h, std::size_t t, const ARParams& alpha);

/// One ascending sweep t = 1..n. Returns the number of failed updates.
std::size_t slice_update_state(LatentPath& h, const Dataset& data, const ModelSpec& spec, const ARParams& alpha,
                               Rng& rng, const SliceOptions& options = {});

/// Slice sweep for h (plus the shared shape step unless fix_shape), alpha fixed.
DrawStore run_ss_chain(const MCMCConfig& config, const Dataset& data, Family family, const Priors& priors,
                       const ARParams& alpha, Rng& rng);

}  // namespace ums
