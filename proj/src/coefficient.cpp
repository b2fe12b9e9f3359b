#include "plab/coefficient.hpp"

#include <algorithm>
#include <cmath>

namespace plab {

Coefficient Coefficient::constant(cplx value) {
    Coefficient c;
    c.rule_ = [value](long) { return value; };
    c.limit_ = value;
    c.decay_ = Decay::Exact;
    c.decay_constant_ = 0.0;
    return c;
}

Coefficient Coefficient::rational(std::vector<cplx> num, std::vector<cplx> den) {
    auto degree = [](const std::vector<cplx>& p) {
        for (size_t i = p.size(); i-- > 0;)
            if (p[i] != cplx(0.0)) return static_cast<long>(i);
        return -1L;
    };
    long dn = degree(num);
    long dd = degree(den);
    if (dd < 0) throw EvaluationError("rational coefficient with zero denominator");
    if (dn > dd)
        throw EvaluationError("rational coefficient diverges: deg(num) > deg(den)");

    cplx lim = (dn == dd && dn >= 0) ? num[static_cast<size_t>(dn)] / den[static_cast<size_t>(dd)]
                                     : cplx(0.0);
    bool is_const = (dn <= 0 && dd == 0);

    Coefficient c;
    c.rule_ = [num = std::move(num), den = std::move(den)](long nu) {
        cplx z(static_cast<double>(nu), 0.0);
        cplx d = polyval(den, z);
        if (d == cplx(0.0))
            throw EvaluationError("rational coefficient pole at nu=" + std::to_string(nu));
        return polyval(num, z) / d;
    };
    c.limit_ = lim;
    // A rational sequence with a finite limit approaches it at least as 1/nu.
    c.decay_ = is_const ? Decay::Exact : Decay::InverseNu;
    return c;
}

Coefficient Coefficient::table(std::vector<cplx> values, Coefficient tail) {
    Coefficient c;
    c.limit_ = tail.limit_;
    c.decay_ = tail.decay_ == Decay::Exact ? Decay::InverseNu : tail.decay_;
    c.decay_constant_ = std::nullopt;
    c.rule_ = [values = std::move(values), tail = std::move(tail)](long nu) {
        if (nu >= 0 && static_cast<size_t>(nu) < values.size())
            return values[static_cast<size_t>(nu)];
        return tail(nu);
    };
    return c;
}

Coefficient Coefficient::closure(std::function<cplx(long)> rule, std::optional<cplx> limit,
                                 Decay decay, std::optional<double> decay_constant,
                                 bool memoize) {
    Coefficient c;
    c.rule_ = std::move(rule);
    c.limit_ = limit;
    c.decay_ = decay;
    c.decay_constant_ = decay_constant;
    if (memoize) c.memo_ = std::make_shared<Memo>();
    return c;
}

cplx Coefficient::operator()(long nu) const {
    if (memo_) {
        std::lock_guard<std::mutex> lock(memo_->mu);
        auto it = memo_->cache.find(nu);
        if (it != memo_->cache.end()) return it->second;
        cplx v = rule_(nu);
        memo_->cache.emplace(nu, v);
        return v;
    }
    return rule_(nu);
}

cplx Coefficient::limit() const {
    if (!limit_) throw ClassError("coefficient has no declared limit");
    return *limit_;
}

bool Coefficient::is_constant_one() const {
    return decay_ == Decay::Exact && limit_ && *limit_ == cplx(1.0);
}

bool Coefficient::is_constant_zero() const {
    return decay_ == Decay::Exact && limit_ && *limit_ == cplx(0.0);
}

double Coefficient::estimate_decay_constant(long nu_max) const {
    if (decay_ == Decay::Exact) return 0.0;
    if (decay_constant_) return *decay_constant_;
    cplx lim = limit();
    double best = 0.0;
    for (long nu = 0; nu <= nu_max; ++nu)
        best = std::max(best, static_cast<double>(nu + 1) * std::abs(rule_(nu) - lim));
    return best;
}

}  // namespace plab
