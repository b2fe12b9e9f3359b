#include "plab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace plab {
namespace {

cplx horner(const std::vector<cplx>& p, cplx z) { return polyval(p, z); }

cplx horner_derivative(const std::vector<cplx>& p, cplx z) {
    cplx acc = 0.0;
    for (size_t i = p.size(); i-- > 1;)
        acc = acc * z + static_cast<double>(i) * p[i];
    return acc;
}

std::vector<cplx> companion_eigenvalues(const std::vector<cplx>& poly) {
    long n = static_cast<long>(poly.size()) - 1;
    Mat a = Mat::Zero(n, n);
    for (long i = 0; i + 1 < n; ++i) a(i, i + 1) = 1.0;
    for (long k = 0; k < n; ++k) a(n - 1, k) = -poly[static_cast<size_t>(k)];
    Eigen::ComplexEigenSolver<Mat> es(a, false);
    std::vector<cplx> out(static_cast<size_t>(n));
    for (long i = 0; i < n; ++i) out[static_cast<size_t>(i)] = es.eigenvalues()[i];
    return out;
}

}  // namespace

std::vector<cplx> characteristic_polynomial(const Equation& eq) {
    return eq.limits();
}

std::vector<Root> find_roots(const std::vector<cplx>& poly, double merge_tol) {
    long n = static_cast<long>(poly.size()) - 1;
    if (n < 1) throw EvaluationError("find_roots requires degree >= 1");
    if (std::abs(poly.back() - cplx(1.0)) > 1e-12)
        throw EvaluationError("find_roots expects a monic polynomial");

    // Strip exact zero roots first; they are common (k* > 0) and slow the
    // simultaneous iteration down.
    std::vector<cplx> p = poly;
    int zero_mult = 0;
    while (p.size() > 1 && std::abs(p.front()) == 0.0) {
        p.erase(p.begin());
        ++zero_mult;
    }
    long deg = static_cast<long>(p.size()) - 1;

    std::vector<cplx> z(static_cast<size_t>(deg));
    bool converged = deg == 0;
    if (deg > 0) {
        // Initial guesses on a circle sized by the coefficient bound.
        double radius = 0.0;
        for (long k = 0; k < deg; ++k)
            radius = std::max(radius, std::pow(std::abs(p[static_cast<size_t>(k)]), 1.0 / (deg - k)));
        radius = std::max(radius, 0.5);
        for (long j = 0; j < deg; ++j) {
            double angle = 2.0 * M_PI * (static_cast<double>(j) + 0.5) / static_cast<double>(deg) + 0.4;
            z[static_cast<size_t>(j)] = radius * cplx(std::cos(angle), std::sin(angle));
        }

        // Aberth-Ehrlich simultaneous Newton iteration.
        constexpr int kMaxIter = 200;
        for (int iter = 0; iter < kMaxIter && !converged; ++iter) {
            double worst = 0.0;
            for (long j = 0; j < deg; ++j) {
                cplx zj = z[static_cast<size_t>(j)];
                cplx val = horner(p, zj);
                cplx der = horner_derivative(p, zj);
                cplx ratio = (der == cplx(0.0)) ? cplx(0.0) : val / der;
                cplx repulsion = 0.0;
                for (long i = 0; i < deg; ++i) {
                    if (i == j) continue;
                    cplx d = zj - z[static_cast<size_t>(i)];
                    if (d != cplx(0.0)) repulsion += cplx(1.0) / d;
                }
                cplx denom = cplx(1.0) - ratio * repulsion;
                cplx step = (denom == cplx(0.0)) ? ratio : ratio / denom;
                z[static_cast<size_t>(j)] -= step;
                worst = std::max(worst, std::abs(step) / std::max(1.0, std::abs(zj)));
            }
            converged = worst < 1e-14;
        }
        if (!converged) {
            z = companion_eigenvalues(p);
            converged = true;
        }
        // A couple of plain Newton polishing sweeps.
        for (int sweep = 0; sweep < 3; ++sweep) {
            for (auto& zj : z) {
                cplx der = horner_derivative(p, zj);
                if (der != cplx(0.0)) zj -= horner(p, zj) / der;
            }
        }
    }

    // Collapse near-coincident roots into multiplicities.
    std::vector<Root> roots;
    std::vector<bool> used(z.size(), false);
    for (size_t i = 0; i < z.size(); ++i) {
        if (used[i]) continue;
        std::vector<cplx> group{z[i]};
        used[i] = true;
        double scale = std::max(1.0, std::abs(z[i]));
        for (size_t j = i + 1; j < z.size(); ++j) {
            if (used[j]) continue;
            if (std::abs(z[j] - z[i]) <= merge_tol * scale) {
                group.push_back(z[j]);
                used[j] = true;
            }
        }
        cplx mean = std::accumulate(group.begin(), group.end(), cplx(0.0)) /
                    static_cast<double>(group.size());
        Root r;
        r.value = mean;
        r.multiplicity = static_cast<int>(group.size());
        r.residual = std::abs(horner(poly, mean));
        roots.push_back(r);
    }
    if (zero_mult > 0) {
        Root r;
        r.value = 0.0;
        r.multiplicity = zero_mult;
        r.residual = std::abs(poly[0]);
        roots.push_back(r);
    }
    std::sort(roots.begin(), roots.end(),
              [](const Root& a, const Root& b) { return std::abs(a.value) > std::abs(b.value); });
    return roots;
}

CharacteristicProfile cluster_moduli(const std::vector<Root>& roots, double tol) {
    if (tol <= 0) throw ConfigError("cluster tolerance must be positive");
    CharacteristicProfile profile;
    profile.cluster_tolerance = tol;
    profile.roots = roots;
    std::sort(profile.roots.begin(), profile.roots.end(),
              [](const Root& a, const Root& b) { return std::abs(a.value) > std::abs(b.value); });

    constexpr double kZeroAbs = 1e-12;
    std::vector<std::vector<const Root*>> groups;
    for (const Root& r : profile.roots) {
        double rho = std::abs(r.value);
        if (rho < kZeroAbs) {
            profile.zero_mult_sum += r.multiplicity;
            profile.zero_mult_max = std::max(profile.zero_mult_max, r.multiplicity);
            continue;
        }
        if (!groups.empty()) {
            double prev = std::abs(groups.back().front()->value);
            if (std::abs(prev - rho) <= tol * prev) {
                groups.back().push_back(&r);
                continue;
            }
            if (std::abs(prev - rho) <= 2.0 * tol * prev)
                profile.warnings.push_back("cluster boundary near tolerance between |z|=" +
                                           std::to_string(prev) + " and |z|=" + std::to_string(rho));
        }
        groups.push_back({&r});
    }

    for (const auto& g : groups) {
        ModulusCluster c;
        double acc = 0;
        for (const Root* r : g) {
            acc += std::abs(r->value) * r->multiplicity;
            c.mult_sum += r->multiplicity;
            c.mult_max = std::max(c.mult_max, r->multiplicity);
        }
        c.rho = acc / c.mult_sum;
        profile.clusters.push_back(c);
    }
    for (const auto& c : profile.clusters) profile.k_global = std::max(profile.k_global, c.mult_max);
    return profile;
}

CharacteristicProfile analyze_profile(const Equation& eq, double tol) {
    auto poly = characteristic_polynomial(eq);
    auto profile = cluster_moduli(find_roots(poly), tol);
    profile.poly_coeffs = poly;
    return profile;
}

std::vector<cplx> CharacteristicProfile::cluster_polynomial(long i) const {
    long count = s();
    std::vector<cplx> coeffs{1.0};
    auto mul_linear = [&coeffs](cplx root) {
        // coeffs *= (z - root)
        coeffs.push_back(0.0);
        for (size_t j = coeffs.size(); j-- > 1;)
            coeffs[j] = coeffs[j - 1] - root * coeffs[j];
        coeffs[0] *= -root;
    };
    if (i == count + 1) {
        for (int j = 0; j < zero_mult_sum; ++j) mul_linear(0.0);
        return coeffs;
    }
    if (i < 1 || i > count) throw RangeError("cluster index out of range");
    double target = clusters[static_cast<size_t>(i - 1)].rho;
    for (const Root& r : roots) {
        double rho = std::abs(r.value);
        if (rho < 1e-12) continue;
        if (std::abs(rho - target) <= cluster_tolerance * target)
            for (int j = 0; j < r.multiplicity; ++j) mul_linear(r.value);
    }
    return coeffs;
}

long CharacteristicProfile::level_dimension(long theta) const {
    long dim = zero_mult_sum;
    for (long i = s(); i >= theta; --i)
        if (i >= 1) dim += clusters[static_cast<size_t>(i - 1)].mult_sum;
    return dim;
}

}  // namespace plab
