#include "bosebox/canonical.hpp"

#include <cmath>
#include <sstream>

#include "bosebox/errors.hpp"
#include "bosebox/numeric.hpp"

namespace bosebox {

namespace {

// Terms e^{-x} with x beyond this are dropped from power sums; relative to the
// ground term (= 1) the dropped mass is below count * e^{-x}.
double drop_threshold(std::size_t count) { return 40.0 + std::log(double(count) + 1.0); }

// Partial power sums P_j = sum_{k < k_end} e^{-j beta eta_k}, j = 1..n.
std::vector<double> partial_power_sums(const SpectrumTable& t, double beta, int n,
                                       std::size_t k_end) {
    std::vector<double> p(std::size_t(n) + 1, 0.0);
    const double xmax = drop_threshold(k_end);
    for (int j = 1; j <= n; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < k_end; ++k) {
            const double x = j * beta * t.entries[k].gap;
            if (x > xmax) break;
            s += std::exp(-x);
        }
        p[j] = s;
    }
    return p;
}

// log Ztilde(0..n_max) from Ztilde(m) = (1/m) sum_k S_k Ztilde(m-k), run on
// w(i) = Ztilde(i) e^{-ref}. Ztilde is increasing, so entries flushed to zero form a prefix.
std::vector<double> log_recursion(const std::vector<double>& power_sums, int n_max) {
    std::vector<double> w(std::size_t(n_max) + 1, 0.0);
    std::vector<double> out(std::size_t(n_max) + 1, 0.0);
    const double* s = power_sums.data();
    w[0] = 1.0;
    double ref = 0.0;
    int lo = 0;
    for (int m = 1; m <= n_max; ++m) {
        const int kmax = m - lo;
        const double* wm = w.data() + m;
        double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
        int k = 1;
        for (; k + 3 <= kmax; k += 4) {
            a0 += s[k] * wm[-k];
            a1 += s[k + 1] * wm[-k - 1];
            a2 += s[k + 2] * wm[-k - 2];
            a3 += s[k + 3] * wm[-k - 3];
        }
        for (; k <= kmax; ++k) a0 += s[k] * wm[-k];
        const double val = ((a0 + a1) + (a2 + a3)) / m;
        w[m] = val;
        out[m] = ref + std::log(val);
        if (val > 1e250) {
            const double inv = 1.0 / val;
            for (int i = lo; i <= m; ++i) {
                w[i] *= inv;
                if (w[i] < 1e-290) w[i] = 0.0;
            }
            ref = out[m];
            while (w[lo] == 0.0) ++lo;
        }
    }
    return out;
}

}  // namespace

double CanonicalTable::log_z(int m) const {
    return log_z_shifted.at(m) - m * beta * spectrum->ground_energy;
}

CanonicalTable build_canonical(std::shared_ptr<const SpectrumTable> spectrum, double beta, int n_max,
                               double tail_tol) {
    if (n_max < 1) throw DomainError("build_canonical: n_max must be at least 1");
    if (!(beta > 0.0)) throw DomainError("build_canonical: beta must be positive");
    if (spectrum->entries.empty()) throw DomainError("build_canonical: empty spectrum");
    const SpectrumTable& t = *spectrum;
    CanonicalTable ct{spectrum, beta, n_max, {}, {}, {}};

    ct.power_sum_tail.assign(std::size_t(n_max) + 1, 0.0);
    if (!std::isinf(t.cutoff)) {
        for (int k = 1; k <= n_max; ++k)
            ct.power_sum_tail[k] = exp_tail_bound(t.geometry, k * beta, t.cutoff);
        if (ct.power_sum_tail[1] / t.geometry.volume() > tail_tol) {
            std::ostringstream os;
            os << "build_canonical: S_1 tail density " << ct.power_sum_tail[1] / t.geometry.volume()
               << " exceeds tolerance " << tail_tol << " at cutoff " << t.cutoff;
            throw CutoffInsufficient(os.str());
        }
    }
    ct.power_sums = partial_power_sums(t, beta, n_max, t.entries.size());

    ct.log_z_shifted = log_recursion(ct.power_sums, n_max);
    return ct;
}

std::vector<double> log_tail_probabilities(const CanonicalTable& ct, std::size_t k, int n) {
    if (n < 0 || n > ct.n_max) throw DomainError("particle number outside the table");
    const double be = ct.beta * ct.gap(k);
    const auto& lz = ct.log_z_shifted;
    std::vector<double> lp(std::size_t(n) + 2, kNegInf);
    for (int j = 0; j <= n; ++j) lp[j] = -j * be + lz[n - j] - lz[n];
    lp[0] = 0.0;
    return lp;
}

double DiscreteDistribution::mean() const { return moment(1); }

double DiscreteDistribution::moment(int r) const {
    double s = 0.0;
    for (std::size_t j = 1; j < mass.size(); ++j) s += std::pow(double(j), r) * mass[j];
    return s;
}

std::vector<double> log_occupation_pmf(const CanonicalTable& ct, std::size_t k, int n) {
    if (n < 0 || n > ct.n_max) throw DomainError("particle number outside the table");
    const auto& e = ct.spectrum->entries;
    const double be = ct.beta * ct.gap(k);
    std::vector<double> out(std::size_t(n) + 1, kNegInf);
    if (e.size() == 1) {
        out[n] = 0.0;
        return out;
    }
    // P(N_k = j) = e^{-j beta eta_k} Z_{without k}(n - j) / Z(n); the reduced
    // recursion has positive terms only, so small masses keep full relative precision
    const std::size_t first = k == 0 ? 1 : 0;
    const double base = e[first].gap;
    std::vector<double> p(std::size_t(n) + 1, 0.0);
    const double xmax = drop_threshold(e.size());
    for (int j = 1; j <= n; ++j) {
        double s = 0.0;
        for (std::size_t i = first; i < e.size(); ++i) {
            if (i == k) continue;
            const double x = j * ct.beta * (e[i].gap - base);
            if (x > xmax) break;
            s += std::exp(-x);
        }
        p[j] = s;
    }
    const auto lr = log_recursion(p, n);
    const double lzn = ct.log_z_shifted[n];
    for (int j = 0; j <= n; ++j)
        out[j] = -j * be + lr[n - j] - (n - j) * ct.beta * base - lzn;
    return out;
}

DiscreteDistribution occupation_pmf(const CanonicalTable& ct, std::size_t k, int n) {
    const auto lp = log_occupation_pmf(ct, k, n);
    DiscreteDistribution d;
    d.mass.resize(std::size_t(n) + 1);
    for (int j = 0; j <= n; ++j) d.mass[j] = std::exp(lp[j]);
    return d;
}

double occupation_laplace(const CanonicalTable& ct, std::size_t k, int n, double lambda) {
    if (lambda == 0.0 || n == 0) {
        log_tail_probabilities(ct, k, n);  // index validation
        return 1.0;
    }
    // <e^{-lambda N}> = 1 - (1 - e^{-lambda}) sum_{j>=1} e^{-lambda(j-1)} P(N >= j)
    const auto lp = log_tail_probabilities(ct, k, n);
    std::vector<double> terms(static_cast<std::size_t>(n));
    for (int j = 1; j <= n; ++j) terms[j - 1] = -lambda * (j - 1) + lp[j];
    const double l = log_sum_exp(terms);
    if (lambda < 0.0) return 1.0 + std::expm1(-lambda) * std::exp(l);
    const double x = -std::expm1(-lambda) * std::exp(l);
    if (x < 0.5) return 1.0 - x;
    // closed form cancels; sum the pmf directly
    std::vector<double> direct(std::size_t(n) + 1);
    for (int j = 0; j <= n; ++j) direct[j] = -lambda * j + log_sub(lp[j], lp[j + 1]);
    return std::exp(log_sum_exp(direct));
}

double occupation_moment(const CanonicalTable& ct, std::size_t k, int n, int r) {
    if (r < 1 || r > 4) throw DomainError("occupation_moment: r must be in 1..4");
    const auto lp = log_tail_probabilities(ct, k, n);
    // sum_j (j^r - (j-1)^r) P(N >= j)
    double s = 0.0;
    for (int j = n; j >= 1; --j) {
        const double jj = j;
        s += (std::pow(jj, r) - std::pow(jj - 1.0, r)) * std::exp(lp[j]);
    }
    return s;
}

double generalized_condensate(const CanonicalTable& ct, int n, double epsilon) {
    if (!(epsilon > 0.0)) throw DomainError("generalized_condensate: epsilon must be positive");
    if (n < 0 || n > ct.n_max) throw DomainError("particle number outside the table");
    const auto& e = ct.spectrum->entries;
    std::size_t k_end = 0;
    while (k_end < e.size() && e[k_end].gap < epsilon) ++k_end;
    // sum_{k in set} <N_k> = sum_j P_j Ztilde(n-j) / Ztilde(n)
    const auto p = partial_power_sums(*ct.spectrum, ct.beta, n, k_end);
    const auto& lz = ct.log_z_shifted;
    double s = 0.0;
    for (int j = n; j >= 1; --j) s += p[j] * std::exp(lz[n - j] - lz[n]);
    return s / ct.volume();
}

TailedCoefficient p_coefficient(const CanonicalTable& ct, std::size_t k, double tail_tol) {
    const SpectrumTable& t = *ct.spectrum;
    const double b = ct.beta;
    const double ek = t.entries.at(k).gap;
    double s = 0.0;
    for (std::size_t j = t.entries.size(); j-- > 0;) {
        if (j == k) continue;
        const double d = b * (t.entries[j].gap - ek);
        if (d == 0.0) throw DomainError("p_coefficient: level is degenerate, p_k is infinite");
        s += d > 0.0 ? log1mexp(d) : std::log(std::expm1(-d));
    }
    const double v = t.geometry.volume();
    double tail = 0.0;
    if (!std::isinf(t.cutoff)) {
        tail = std::exp(b * ek) * exp_tail_bound(t.geometry, b, t.cutoff) /
               (-std::expm1(-b * (t.cutoff - ek))) / (b * v);
        if (tail > tail_tol) throw CutoffInsufficient("p_coefficient: spectral tail above tolerance");
    }
    return {-s / (b * v), tail};
}

KMeasure k_measure(const CanonicalTable& ct, std::size_t k) {
    KMeasure m{k, p_coefficient(ct, k).value, ct.volume(), {}};
    const double be = ct.beta * ct.gap(k);
    const double shift = ct.beta * ct.volume() * m.p_k;
    m.log_values.resize(std::size_t(ct.n_max) + 1);
    for (int r = 0; r <= ct.n_max; ++r) m.log_values[r] = ct.log_z_shifted[r] + r * be - shift;
    return m;
}

double KMeasure::value(double x) const {
    if (x <= 0.0) return 0.0;
    const double r = std::ceil(x * volume) - 1.0;
    if (r >= double(log_values.size())) throw DomainError("KMeasure::value: x beyond the table");
    return std::exp(log_values[std::size_t(std::max(r, 0.0))]);
}

double KMeasure::laplace(double lambda, int r_max) const {
    if (r_max < 0 || r_max >= int(log_values.size())) throw DomainError("KMeasure::laplace: r_max");
    std::vector<double> terms(std::size_t(r_max) + 1);
    for (int r = 0; r <= r_max; ++r) {
        const double prev = r == 0 ? kNegInf : log_values[r - 1];
        terms[r] = -lambda * r / volume + log_sub(log_values[r], prev);
    }
    return std::exp(log_sum_exp(terms));
}

double KMeasure::occupation_laplace(int n, double lambda) const {
    if (n < 0 || n >= int(log_values.size())) throw DomainError("KMeasure: n outside the table");
    std::vector<double> terms(std::size_t(n) + 1);
    for (int r = 0; r <= n; ++r) {
        const double prev = r == 0 ? kNegInf : log_values[r - 1];
        terms[r] = -lambda * (n - r) / volume + log_sub(log_values[r], prev) - log_values[n];
    }
    return std::exp(log_sum_exp(terms));
}

double log_grand_partition(const SpectrumTable& t, double mu_bar, double beta) {
    if (!(mu_bar < 0.0)) throw DomainError("log_grand_partition: requires mu < E1(V)");
    double s = 0.0;
    for (auto it = t.entries.rbegin(); it != t.entries.rend(); ++it)
        s -= log1mexp(beta * (it->gap - mu_bar));
    return s;
}

}  // namespace bosebox
