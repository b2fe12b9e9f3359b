#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "plab/envelope.hpp"
#include "plab/equation.hpp"
#include "plab/spectral.hpp"

namespace plab {

struct GrowthEstimate {
    enum class Flag { None, ZeroSolution, SuperExponentialDecay };
    double value = 0;       // max over the tail of |y(nu)|^{1/nu}
    double regression = 0;  // exp(slope of ln|y| vs nu), cross-check
    Flag flag = Flag::None;
};

/// limsup |y(nu)|^{1/nu} estimated over the trailing `tail_fraction` of the
/// trajectory. Requires length >= 64.
GrowthEstimate growth_exponent(const Trajectory& traj, double tail_fraction = 0.5);

struct FiltrationOptions {
    std::uint64_t seed = 0x5eed;
    double angle_tol = 1e-6;
    int samples = 20;
    /// Relative tolerance for the Remark-1 exponent consistency check; the
    /// default widens with short horizons since |y(nu)|^{1/nu} carries an
    /// O(ln nu / nu) prefactor bias.
    std::optional<double> exponent_tol;
};

/// Numerically reconstructed modulus filtration at one offset. levels[t]
/// spans V^wedge_{m,t+1} (nested by construction: every level is a leading
/// column block of one frame); complements[i] spans the orthogonal
/// complement choice of V^vee_{m,i+1}.
///
/// frames holds the sweep frame at every index of [offset, offset+horizon];
/// sampling a decaying subspace re-projects forward iterates onto the level
/// block of frames[nu - offset] each step, which keeps rounding-injected
/// fast components out of slow trajectories.
struct FiltrationReport {
    long offset = 0;
    long horizon = 0;
    std::vector<Mat> levels;
    std::vector<Mat> complements;
    std::vector<double> level_angles;  // sweep-vs-half-sweep diagnostics
    std::vector<std::vector<double>> exponents;  // per complement column
    std::vector<std::string> violations;
    std::vector<Mat> frames;  // per-index sweep frames (empty in kernel mode)
    std::vector<long> level_dims;

    const Mat& level(long theta) const { return levels.at(static_cast<size_t>(theta - 1)); }
    const Mat& complement(long i) const { return complements.at(static_cast<size_t>(i - 1)); }

    /// Level-theta basis at an absolute index covered by the stored frames.
    Mat level_at(long theta, long nu) const;
};

/// Trajectory of the solution with the given window at report.offset,
/// confined to filtration level theta: each forward step is projected back
/// onto the tracked level subspace so faster modes cannot take over.
Trajectory confined_trajectory(const Equation& eq, const FiltrationReport& report, long theta,
                               const Vec& window_at_offset, long count);

FiltrationReport compute_filtration(const Equation& eq, const CharacteristicProfile& profile,
                                    long horizon, const FiltrationOptions& opts = {});

struct EnvelopeCheck {
    std::string name;
    double fitted = 0;       // constant fitted over the full horizon
    double fitted_half = 0;  // constant fitted over the first half (stability)
    long binding_nu = 0;
    bool ok = true;
    std::string note;
    std::vector<std::pair<long, double>> margin;  // decimated log-margin series
};

struct VerifyResults {
    std::vector<EnvelopeCheck> checks;
    std::vector<std::string> violations;
};

/// Theorem-7 content: lower envelopes on the complement pieces, upper
/// envelopes on the filtration levels, the factorial envelope on the zero
/// cluster, and the empirical deficit series standing in for the vanishing
/// alpha(nu) term.
VerifyResults verify_theorem7(const Equation& eq, const CharacteristicProfile& profile,
                              const FiltrationReport& report, long horizon,
                              const FiltrationOptions& opts = {});

struct SubspaceSpec {
    enum class Kind { Star, Graph, Random };
    Kind kind = Kind::Star;
    long theta = 1;
    /// Graph subspaces (I + xi)(V*_theta): explicit coefficient matrix of xi
    /// in the (level theta+1 basis) x (V*_theta basis) coordinates, or a
    /// seeded random draw scaled by xi_scale when absent.
    std::optional<Mat> xi;
    double xi_scale = 1.0;
    /// Random transversal subspaces: dimension (defaults to dim V*_theta).
    long dim = -1;
};

/// Theorems 8-10: a single constant must bound every sampled unit-omega
/// vector of the subspace from below at rho_theta with the global k.
VerifyResults verify_theorem8_10(const Equation& eq, const CharacteristicProfile& profile,
                                 const FiltrationReport& report, const SubspaceSpec& spec,
                                 long horizon, const FiltrationOptions& opts = {});

/// Section-5 content for merely convergent coefficients: eps-geometric upper
/// and lower envelopes plus the final corollary's two-sided h(X) bound.
VerifyResults verify_section5(const Equation& eq, const CharacteristicProfile& profile,
                              const FiltrationReport& report, double epsilon, long horizon,
                              const FiltrationOptions& opts = {});

}  // namespace plab
