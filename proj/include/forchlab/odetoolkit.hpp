#pragma once

/**
 * @file odetoolkit.hpp
 * @brief Differential-inequality machinery: the linear Gronwall envelope and
 *        numerical checkers for four comparison lemmas on scalar trajectories
 *
 *   A1: y' ≤ -h φ⁻¹(y) + f  ⇒  y ≤ y(0) + φ(M(t)),  limsup y ≤ φ(limsup f/h)
 *   A2: φ(z) = c(z+z^γ), y' ≤ -φ⁻¹(y) + f  ⇒  y ≤ C(1 + β^{γ/(2-γ)} + f^γ)
 *       beyond some T, with C = 3[32(1+c)]^{2/(2-γ)} and β = limsup [f']⁻
 *   A3: y' ≤ -h y + f, ∫h = ∞, g'/(gh) → 0  ⇒  limsup g y ≤ limsup g f / h
 *   A4: β = limsup [f']⁻ < ∞  ⇒  f(t₁) ≤ f(t₂) + (t₂-t₁)(β+1) beyond some T
 *
 * Infinite-horizon statements are certified on finite runs by tail-window
 * surrogates: ∫h over the horizon must exceed a threshold with nondecreasing
 * trend, and limsups become tail-window maxima. A violated hypothesis makes a
 * checker INCONCLUSIVE rather than FAIL.
 */

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace forchlab {

struct ScalarTrajectory {
    std::vector<double> times;
    std::vector<double> values;

    void validate() const {
        if (times.size() != values.size() || times.size() < 2)
            throw std::invalid_argument("ScalarTrajectory: need matching times/values");
        for (size_t k = 1; k < times.size(); ++k)
            if (!(times[k] > times[k - 1]))
                throw std::invalid_argument("ScalarTrajectory: times must strictly increase");
        for (double v : values)
            if (v < 0.0)
                throw std::invalid_argument("ScalarTrajectory: values must be nonnegative");
    }
    size_t size() const { return times.size(); }
};

struct PhiSpec {
    enum class Kind { identity, power, mixed };
    Kind kind = Kind::identity;
    double c = 1.0;       // mixed: φ(z) = c(z + z^γ)
    double gamma = 1.5;   // mixed exponent in (1,2); power exponent otherwise
    double C0 = 1.0;      // power: φ(z) = C0 z^γ

    static PhiSpec identity() { return {}; }
    static PhiSpec power(double C0, double exponent) {
        PhiSpec p;
        p.kind = Kind::power;
        p.C0 = C0;
        p.gamma = exponent;
        return p;
    }
    static PhiSpec mixed(double c, double gamma) {
        if (!(gamma > 1.0) || !(gamma < 2.0))
            throw std::invalid_argument("PhiSpec: mixed form needs γ in (1,2)");
        PhiSpec p;
        p.kind = Kind::mixed;
        p.c = c;
        p.gamma = gamma;
        return p;
    }

    double phi(double z) const {
        switch (kind) {
            case Kind::identity: return z;
            case Kind::power: return C0 * std::pow(z, gamma);
            case Kind::mixed: return c * (z + std::pow(z, gamma));
        }
        return z;
    }

    // strictly increasing from [0,∞) onto [0,∞); mixed form inverted by
    // bracketed Newton on [0, z/c] (c(w+w^γ) ≥ cw gives the bracket)
    double phi_inv(double z) const {
        if (z < 0.0) throw std::domain_error("phi_inv: negative argument");
        switch (kind) {
            case Kind::identity: return z;
            case Kind::power: return std::pow(z / C0, 1.0 / gamma);
            case Kind::mixed: {
                if (z == 0.0) return 0.0;
                double lo = 0.0, hi = z / c, w = std::min(hi, 1.0);
                for (int it = 0; it < 128; ++it) {
                    const double val = phi(w) - z;
                    if (std::fabs(val) <= 1e-13 * std::max(z, 1e-300)) return w;
                    if (val > 0.0) hi = w; else lo = w;
                    const double dphi = c * (1.0 + gamma * std::pow(w, gamma - 1.0));
                    double wn = w - val / dphi;
                    if (!(wn > lo) || !(wn < hi)) wn = 0.5 * (lo + hi);
                    w = wn;
                }
                return w;
            }
        }
        return z;
    }
};

enum class Verdict { PASS, FAIL, INCONCLUSIVE };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::PASS: return "PASS";
        case Verdict::FAIL: return "FAIL";
        case Verdict::INCONCLUSIVE: return "INCONCLUSIVE";
    }
    return "?";
}

struct LemmaOutcome {
    std::string name;
    Verdict verdict = Verdict::INCONCLUSIVE;
    double discovered_T = std::numeric_limits<double>::quiet_NaN();
    double beta = 0.0;            // tail estimate of limsup [f']⁻ where used
    double worst_margin = 0.0;    // most negative (RHS - LHS)/scale over checked samples
    std::string note;
};

namespace ode_detail {

// central differences interior, one-sided at the ends
inline std::vector<double> differentiate(const std::vector<double>& t,
                                         const std::vector<double>& v) {
    const size_t n = t.size();
    std::vector<double> d(n, 0.0);
    if (n < 2) return d;
    d[0] = (v[1] - v[0]) / (t[1] - t[0]);
    d[n - 1] = (v[n - 1] - v[n - 2]) / (t[n - 1] - t[n - 2]);
    for (size_t k = 1; k + 1 < n; ++k) d[k] = (v[k + 1] - v[k - 1]) / (t[k + 1] - t[k - 1]);
    return d;
}

// |y''| estimate by second differences, for differencing slack
inline std::vector<double> second_derivative_mag(const std::vector<double>& t,
                                                 const std::vector<double>& v) {
    const size_t n = t.size();
    std::vector<double> d(n, 0.0);
    for (size_t k = 1; k + 1 < n; ++k) {
        const double h = 0.5 * (t[k + 1] - t[k - 1]);
        d[k] = std::fabs(v[k + 1] - 2 * v[k] + v[k - 1]) / (h * h);
    }
    if (n >= 3) {
        d[0] = d[1];
        d[n - 1] = d[n - 2];
    }
    return d;
}

inline size_t tail_start(const std::vector<double>& t, double window) {
    const double t0 = t.front(), t1 = t.back();
    const double cut = t1 - window * (t1 - t0);
    size_t k = 0;
    while (k + 1 < t.size() && t[k] < cut) ++k;
    return k;
}

inline double tail_max(const std::vector<double>& t, const std::vector<double>& v,
                       double window) {
    double m = -std::numeric_limits<double>::infinity();
    for (size_t k = tail_start(t, window); k < v.size(); ++k) m = std::max(m, v[k]);
    return m;
}

inline double trapezoid(const std::vector<double>& t, const std::vector<double>& v) {
    double s = 0.0;
    for (size_t k = 1; k < t.size(); ++k)
        s += 0.5 * (v[k] + v[k - 1]) * (t[k] - t[k - 1]);
    return s;
}

}  // namespace ode_detail

/**
 * Envelope of y' ≤ -h y + f, y(0) ≤ y0:
 * E(t) = y0 exp(-∫₀ᵗ h) + ∫₀ᵗ exp(-∫ₛᵗ h) f(s) ds by stable trapezoid
 * accumulation. Any subsolution stays below E.
 */
inline ScalarTrajectory gronwall_linear_envelope(double y0, const std::vector<double>& h,
                                                 const std::vector<double>& f,
                                                 const std::vector<double>& times) {
    if (h.size() != times.size() || f.size() != times.size())
        throw std::invalid_argument("gronwall_linear_envelope: series size mismatch");
    ScalarTrajectory E;
    E.times = times;
    E.values.assign(times.size(), 0.0);
    E.values[0] = y0;
    for (size_t k = 1; k < times.size(); ++k) {
        const double dt = times[k] - times[k - 1];
        const double dH = 0.5 * (h[k] + h[k - 1]) * dt;
        const double decay = std::exp(-dH);
        E.values[k] = E.values[k - 1] * decay + 0.5 * dt * (f[k - 1] * decay + f[k]);
    }
    return E;
}

struct CheckerOptions {
    double tol = 1e-6;             // relative slack on pointwise comparisons
    double tail_tol = 1e-3;        // slack on tail-max limsup surrogates, which
                                   // carry the transient remainder of the horizon
    double tail_window = 0.25;     // fraction of the horizon treated as "t → ∞"
    double slack_factor = 5.0;     // differencing slack = factor · Δt · |y''|
    double divergence_threshold = 20.0;  // certifies ∫h = ∞ on the horizon
};

/**
 * Lemma checker: y' ≤ -h φ⁻¹(y) + f with increasing M ≥ f/h implies
 * (i) y ≤ y(0) + φ(M) everywhere, (ii) limsup y ≤ φ(limsup f/h) when ∫h = ∞.
 */
inline LemmaOutcome check_lemma_a1(const ScalarTrajectory& y, const std::vector<double>& h,
                                   const std::vector<double>& f, const PhiSpec& phi,
                                   const std::vector<double>& M,
                                   const CheckerOptions& opt = {}) {
    y.validate();
    LemmaOutcome out;
    out.name = "lemma.a1";
    const auto& t = y.times;
    const auto dy = ode_detail::differentiate(t, y.values);
    const auto d2 = ode_detail::second_derivative_mag(t, y.values);

    // hypothesis with differencing slack
    for (size_t k = 1; k + 1 < t.size(); ++k) {
        const double dt = 0.5 * (t[k + 1] - t[k - 1]);
        const double rhs = -h[k] * phi.phi_inv(y.values[k]) + f[k];
        const double slack = opt.slack_factor * dt * d2[k] +
                             opt.tol * std::max({std::fabs(rhs), y.values[k], 1.0});
        if (dy[k] > rhs + slack) {
            out.verdict = Verdict::INCONCLUSIVE;
            out.note = "hypothesis y' <= -h*phi_inv(y) + f violated at t = " +
                       std::to_string(t[k]);
            return out;
        }
    }

    // (i) pointwise bound through the monotone majorant
    for (size_t k = 0; k < t.size(); ++k) {
        const double rhs = y.values[0] + phi.phi(M[k]);
        const double scale = std::max({rhs, y.values[k], 1e-30});
        const double margin = (rhs - y.values[k]) / scale;
        out.worst_margin = std::min(out.worst_margin, margin);
        if (y.values[k] > rhs + opt.tol * scale) {
            out.verdict = Verdict::FAIL;
            out.note = "conclusion (i) violated at t = " + std::to_string(t[k]);
            return out;
        }
    }

    // (ii) tail bound, only when the sampled ∫h certifies divergence
    const double H = ode_detail::trapezoid(t, h);
    if (H >= opt.divergence_threshold) {
        std::vector<double> ratio(t.size());
        for (size_t k = 0; k < t.size(); ++k) ratio[k] = f[k] / h[k];
        const double limit = phi.phi(ode_detail::tail_max(t, ratio, opt.tail_window));
        const double tail_y = ode_detail::tail_max(t, y.values, opt.tail_window);
        if (tail_y > limit + opt.tail_tol * std::max({limit, tail_y, 1.0})) {
            out.verdict = Verdict::FAIL;
            out.note = "conclusion (ii) tail bound violated";
            return out;
        }
    } else {
        out.note = "integral of h too small to certify divergence; (ii) skipped";
    }
    out.verdict = Verdict::PASS;
    return out;
}

/**
 * Lemma checker for the mixed φ(z) = c(z+z^γ): beyond a discovered threshold
 * T, y ≤ C (1 + β^{γ/(2-γ)} + f^γ) with the tracked constant
 * C = 3[32(1+c)]^{2/(2-γ)}.
 */
inline LemmaOutcome check_lemma_a2(const ScalarTrajectory& y, const std::vector<double>& f,
                                   const PhiSpec& phi, const CheckerOptions& opt = {}) {
    if (phi.kind != PhiSpec::Kind::mixed)
        throw std::invalid_argument("check_lemma_a2: needs the mixed phi form");
    y.validate();
    LemmaOutcome out;
    out.name = "lemma.a2";
    const auto& t = y.times;
    const auto dy = ode_detail::differentiate(t, y.values);
    const auto d2 = ode_detail::second_derivative_mag(t, y.values);

    for (size_t k = 1; k + 1 < t.size(); ++k) {
        const double dt = 0.5 * (t[k + 1] - t[k - 1]);
        const double rhs = -phi.phi_inv(y.values[k]) + f[k];
        const double slack = opt.slack_factor * dt * d2[k] +
                             opt.tol * std::max({std::fabs(rhs), y.values[k], 1.0});
        if (dy[k] > rhs + slack) {
            out.verdict = Verdict::INCONCLUSIVE;
            out.note = "hypothesis violated at t = " + std::to_string(t[k]);
            return out;
        }
    }

    const auto df = ode_detail::differentiate(t, f);
    std::vector<double> fneg(df.size());
    for (size_t k = 0; k < df.size(); ++k) fneg[k] = std::max(-df[k], 0.0);
    out.beta = ode_detail::tail_max(t, fneg, opt.tail_window);

    const double gamma = phi.gamma;
    const double C = 3.0 * std::pow(32.0 * (1.0 + phi.c), 2.0 / (2.0 - gamma));
    const double beta_term = std::pow(out.beta, gamma / (2.0 - gamma));

    // earliest sample index after which the bound holds for the whole rest
    size_t first_ok = t.size();
    for (size_t k = t.size(); k-- > 0;) {
        const double rhs = C * (1.0 + beta_term + std::pow(f[k], gamma));
        if (y.values[k] <= rhs * (1.0 + opt.tol)) first_ok = k;
        else break;
    }
    const size_t last_allowed = ode_detail::tail_start(t, opt.tail_window);
    if (first_ok >= last_allowed) {
        out.verdict = Verdict::FAIL;
        out.note = "no threshold T before the final window";
        return out;
    }
    out.discovered_T = t[first_ok];
    out.verdict = Verdict::PASS;
    return out;
}

/**
 * Lemma checker: y' ≤ -h y + f with ∫h = ∞ and g'/(gh) → 0 implies
 * limsup g y ≤ limsup g f / h, via tail-window maxima.
 */
inline LemmaOutcome check_lemma_a3(const ScalarTrajectory& y, const std::vector<double>& h,
                                   const std::vector<double>& f, const std::vector<double>& g,
                                   const CheckerOptions& opt = {}) {
    y.validate();
    LemmaOutcome out;
    out.name = "lemma.a3";
    const auto& t = y.times;
    const auto dy = ode_detail::differentiate(t, y.values);
    const auto d2 = ode_detail::second_derivative_mag(t, y.values);
    for (size_t k = 1; k + 1 < t.size(); ++k) {
        const double dt = 0.5 * (t[k + 1] - t[k - 1]);
        const double rhs = -h[k] * y.values[k] + f[k];
        const double slack = opt.slack_factor * dt * d2[k] +
                             opt.tol * std::max({std::fabs(rhs), y.values[k], 1.0});
        if (dy[k] > rhs + slack) {
            out.verdict = Verdict::INCONCLUSIVE;
            out.note = "hypothesis violated at t = " + std::to_string(t[k]);
            return out;
        }
    }

    const double H = ode_detail::trapezoid(t, h);
    if (H < opt.divergence_threshold) {
        out.verdict = Verdict::INCONCLUSIVE;
        out.note = "cannot certify divergence of the h integral on this horizon";
        return out;
    }
    const auto dg = ode_detail::differentiate(t, g);
    std::vector<double> side(t.size());
    for (size_t k = 0; k < t.size(); ++k) side[k] = std::fabs(dg[k] / (g[k] * h[k]));
    if (ode_detail::tail_max(t, side, opt.tail_window) > 0.05) {
        out.verdict = Verdict::INCONCLUSIVE;
        out.note = "side condition g'/(gh) -> 0 not numerically satisfied on the tail";
        return out;
    }

    std::vector<double> gy(t.size()), gfh(t.size());
    for (size_t k = 0; k < t.size(); ++k) {
        gy[k] = g[k] * y.values[k];
        gfh[k] = g[k] * f[k] / h[k];
    }
    const double lhs = ode_detail::tail_max(t, gy, opt.tail_window);
    const double rhs = ode_detail::tail_max(t, gfh, opt.tail_window);
    out.worst_margin = (rhs - lhs) / std::max({rhs, lhs, 1e-30});
    if (lhs > rhs + opt.tail_tol * std::max({rhs, lhs, 1.0})) {
        out.verdict = Verdict::FAIL;
        out.note = "tail of g*y exceeds tail of g*f/h";
        return out;
    }
    out.verdict = Verdict::PASS;
    return out;
}

/**
 * Two-point slope bound: with β = limsup [f']⁻ finite, beyond a discovered T
 * every sampled pair t₂ > t₁ > T satisfies f(t₁) ≤ f(t₂) + (t₂-t₁)(β+1).
 * Report-only (never INCONCLUSIVE).
 */
inline LemmaOutcome check_lemma_a4(const ScalarTrajectory& f, const CheckerOptions& opt = {}) {
    f.validate();
    LemmaOutcome out;
    out.name = "lemma.a4";
    const auto& t = f.times;
    const auto df = ode_detail::differentiate(t, f.values);
    std::vector<double> fneg(df.size());
    for (size_t k = 0; k < df.size(); ++k) fneg[k] = std::max(-df[k], 0.0);
    out.beta = ode_detail::tail_max(t, fneg, opt.tail_window);

    // f(t1) ≤ f(t2) + (t2-t1)(β+1)  ⇔  s(t1) ≤ s(t2) for s(t) = f(t) + (β+1)t,
    // so a suffix minimum of s settles all pairs at once.
    std::vector<double> s(t.size());
    for (size_t k = 0; k < t.size(); ++k) s[k] = f.values[k] + (out.beta + 1.0) * t[k];
    std::vector<double> suffmin(t.size());
    double cur = std::numeric_limits<double>::infinity();
    for (size_t k = t.size(); k-- > 0;) {
        suffmin[k] = cur;  // min over strictly later samples
        cur = std::min(cur, s[k]);
    }
    size_t first_ok = t.size() - 1;
    for (size_t k = t.size() - 1; k-- > 0;) {
        const double scale = std::max({std::fabs(s[k]), std::fabs(suffmin[k]), 1.0});
        if (s[k] <= suffmin[k] + opt.tol * scale) first_ok = k;
        else break;
    }
    const size_t last_allowed = ode_detail::tail_start(t, opt.tail_window);
    if (first_ok >= last_allowed) {
        out.verdict = Verdict::FAIL;
        out.note = "no threshold T before the final window";
        return out;
    }
    out.discovered_T = t[first_ok];
    out.verdict = Verdict::PASS;
    return out;
}

/** RK4 integration of y' = rhs(t, y) on the given times (for synthetic runs). */
inline ScalarTrajectory integrate_ode(double y0,
                                      const std::function<double(double, double)>& rhs,
                                      const std::vector<double>& times, int substeps = 8) {
    ScalarTrajectory y;
    y.times = times;
    y.values.assign(times.size(), 0.0);
    double v = y0;
    y.values[0] = v;
    for (size_t k = 1; k < times.size(); ++k) {
        const double dt = (times[k] - times[k - 1]) / substeps;
        double t = times[k - 1];
        for (int s = 0; s < substeps; ++s) {
            const double k1 = rhs(t, v);
            const double k2 = rhs(t + 0.5 * dt, std::max(v + 0.5 * dt * k1, 0.0));
            const double k3 = rhs(t + 0.5 * dt, std::max(v + 0.5 * dt * k2, 0.0));
            const double k4 = rhs(t + dt, std::max(v + dt * k3, 0.0));
            v = std::max(v + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4), 0.0);
            t += dt;
        }
        y.values[k] = v;
    }
    return y;
}

inline std::vector<double> uniform_times(double t0, double t1, size_t n) {
    std::vector<double> t(n);
    for (size_t k = 0; k < n; ++k) t[k] = t0 + (t1 - t0) * double(k) / double(n - 1);
    return t;
}

}  // namespace forchlab
