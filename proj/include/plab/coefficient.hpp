#pragma once

#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <unordered_map>
#include <vector>

#include "plab/errors.hpp"
#include "plab/types.hpp"

namespace plab {

/// One coefficient sequence a(nu): an evaluable rule over nu in N-1 together
/// with its declared limit and decay class.
///
/// Decay classes:
///   Exact     -- a(nu) == limit for all nu
///   InverseNu -- a(nu) - limit = O(1/(nu+1)), optionally with an explicit
///                constant C such that |a(nu) - limit| <= C/(nu+1)
///   Vanishing -- a(nu) - limit -> 0 with no declared rate
class Coefficient {
public:
    enum class Decay { Exact, InverseNu, Vanishing };

    Coefficient()
        : rule_([](long) { return cplx(0.0); }),
          limit_(cplx(0.0)),
          decay_(Decay::Exact),
          decay_constant_(0.0) {}

    static Coefficient constant(cplx value);

    /// Rational rule num(nu)/den(nu); coefficient vectors are ascending in
    /// powers of nu. Requires deg(num) <= deg(den) so the limit exists; the
    /// limit and decay class are derived from the polynomials.
    static Coefficient rational(std::vector<cplx> num, std::vector<cplx> den);

    /// First `values.size()` entries tabulated (nu = 0,1,...), then `tail`.
    static Coefficient table(std::vector<cplx> values, Coefficient tail);

    /// Arbitrary rule with declared metadata. Used for composed/divided
    /// operator coefficients and for test equations outside the rational
    /// class. `memoize` caches evaluations (thread-safe).
    static Coefficient closure(std::function<cplx(long)> rule,
                               std::optional<cplx> limit, Decay decay,
                               std::optional<double> decay_constant = {},
                               bool memoize = false);

    cplx operator()(long nu) const;

    bool has_limit() const { return limit_.has_value(); }
    cplx limit() const;
    Decay decay() const { return decay_; }
    std::optional<double> decay_constant() const { return decay_constant_; }

    bool is_constant_one() const;
    bool is_constant_zero() const;

    /// sup over sampled nu <= nu_max of (nu+1)*|a(nu) - limit|; the C_1
    /// ingredient of the transfer estimates when no constant was declared.
    double estimate_decay_constant(long nu_max = 10000) const;

private:
    struct Memo {
        std::mutex mu;
        std::unordered_map<long, cplx> cache;
    };

    std::function<cplx(long)> rule_;
    std::optional<cplx> limit_;
    Decay decay_ = Decay::Exact;
    std::optional<double> decay_constant_;
    std::shared_ptr<Memo> memo_;
};

/// Evaluate a polynomial with ascending coefficients at z.
inline cplx polyval(const std::vector<cplx>& coeffs, cplx z) {
    cplx acc = 0.0;
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * z + *it;
    return acc;
}

}  // namespace plab
