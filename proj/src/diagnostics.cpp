#include "stsurv/diagnostics.hpp"

#include <cmath>
#include <functional>
#include <limits>

namespace stsurv {

namespace {

// First and last halves of every chain (odd middle draw dropped).
std::vector<std::vector<double>> split_chains(const std::vector<std::vector<double>>& chains) {
    std::vector<std::vector<double>> out;
    for (const auto& c : chains) {
        const std::size_t half = c.size() / 2;
        out.emplace_back(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(half));
        out.emplace_back(c.end() - static_cast<std::ptrdiff_t>(half), c.end());
    }
    return out;
}

struct VarianceParts {
    double within = 0.0;
    double between = 0.0;
    double var_plus = 0.0;
};

VarianceParts variance_parts(const std::vector<std::vector<double>>& chains) {
    const auto m = static_cast<double>(chains.size());
    const auto n = static_cast<double>(chains.front().size());
    std::vector<double> means;
    double grand = 0.0;
    for (const auto& c : chains) {
        double s = 0.0;
        for (double v : c) {
            s += v;
        }
        means.push_back(s / n);
        grand += s / n;
    }
    grand /= m;
    VarianceParts p;
    for (std::size_t j = 0; j < chains.size(); ++j) {
        double ss = 0.0;
        for (double v : chains[j]) {
            ss += (v - means[j]) * (v - means[j]);
        }
        p.within += ss / (n - 1.0);
        p.between += (means[j] - grand) * (means[j] - grand);
    }
    p.within /= m;
    p.between *= n / (m - 1.0);
    p.var_plus = (n - 1.0) / n * p.within + p.between / n;
    return p;
}

} // namespace

std::optional<double> split_rhat(const std::vector<std::vector<double>>& chains) {
    if (chains.size() < 2) {
        return std::nullopt;
    }
    for (const auto& c : chains) {
        if (c.size() < 4 || c.size() != chains.front().size()) {
            return std::nullopt;
        }
    }
    const auto parts = variance_parts(split_chains(chains));
    if (parts.within <= 0.0) {
        return parts.between <= 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
    }
    return std::sqrt(parts.var_plus / parts.within);
}

double effective_sample_size(const std::vector<std::vector<double>>& chains) {
    std::size_t total = 0;
    for (const auto& c : chains) {
        total += c.size();
    }
    if (chains.empty() || chains.front().size() < 4) {
        return static_cast<double>(total);
    }
    const auto split = split_chains(chains);
    const std::size_t n = split.front().size();
    const double mn = static_cast<double>(split.size() * n);
    const auto parts = variance_parts(split);
    if (parts.var_plus <= 0.0) {
        return mn;
    }

    const auto autocorr = [&](std::size_t lag) {
        double v = 0.0;
        for (const auto& c : split) {
            for (std::size_t i = lag; i < n; ++i) {
                const double d = c[i] - c[i - lag];
                v += d * d;
            }
        }
        v /= static_cast<double>(split.size() * (n - lag));
        return 1.0 - v / (2.0 * parts.var_plus);
    };

    // Sum rho_1..rho_T, T the first odd lag with rho_{T+1} + rho_{T+2} < 0.
    double sum = autocorr(1);
    std::size_t t = 1;
    while (t + 2 < n) {
        const double pair = autocorr(t + 1) + autocorr(t + 2);
        if (pair < 0.0) {
            break;
        }
        sum += pair;
        t += 2;
    }
    const double n_eff = mn / (1.0 + 2.0 * sum);
    return std::min(n_eff, mn);
}

std::vector<ParameterTrace> scalar_traces(const PosteriorDraws& draws, bool include_beta_star) {
    std::vector<ParameterTrace> traces;
    if (draws.draws.empty()) {
        return traces;
    }
    const auto& opt = draws.options;
    const auto& first = draws.draws.front().state;
    const int K = first.num_functions();
    const int I = first.num_areas();

    const auto add = [&](std::string name, const std::function<double(const ModelState&)>& get) {
        ParameterTrace t;
        t.name = std::move(name);
        t.chains.resize(static_cast<std::size_t>(draws.num_chains));
        for (const auto& d : draws.draws) {
            t.chains[static_cast<std::size_t>(d.chain)].push_back(get(d.state));
        }
        traces.push_back(std::move(t));
    };

    if (opt.use_day_of_week) {
        for (int d = 1; d < kDaysPerWeek; ++d) {
            add("gamma[" + std::to_string(d + 1) + "]", [d](const ModelState& s) { return s.gamma[d]; });
        }
    }
    for (int k = 0; k < K; ++k) {
        add("mu[" + std::to_string(k + 1) + "]", [k](const ModelState& s) { return s.mu[k]; });
    }
    if (!opt.fixed_rho) {
        if (first.rho.size() == 1) {
            add("rho", [](const ModelState& s) { return s.rho[0]; });
        } else {
            for (int k = 0; k < K; ++k) {
                add("rho[" + std::to_string(k + 1) + "]", [k](const ModelState& s) { return s.rho[k]; });
            }
        }
    }
    if (!opt.fixed_sigma_beta) {
        for (int k = 0; k < K; ++k) {
            add("sigma_beta[" + std::to_string(k + 1) + "]",
                [k](const ModelState& s) { return s.sigma_beta[k]; });
        }
    }
    if (opt.use_overdispersion) {
        add("sigma_eps", [](const ModelState& s) { return s.sigma_eps; });
    }
    if (include_beta_star) {
        for (int i = 0; i < I; ++i) {
            for (int k = 0; k < K; ++k) {
                add("beta_star[" + std::to_string(i + 1) + ":" + std::to_string(k + 1) + "]",
                    [i, k](const ModelState& s) { return s.beta_star(i, k); });
            }
        }
    }
    return traces;
}

std::vector<ParameterSummary> diagnostics(const std::vector<ParameterTrace>& traces) {
    std::vector<ParameterSummary> out;
    out.reserve(traces.size());
    for (const auto& t : traces) {
        std::vector<double> all;
        for (const auto& c : t.chains) {
            all.insert(all.end(), c.begin(), c.end());
        }
        ParameterSummary s;
        s.name = t.name;
        s.summary = summarize(all);
        s.rhat = split_rhat(t.chains);
        s.n_eff = effective_sample_size(t.chains);
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<ParameterSummary> diagnostics(const PosteriorDraws& draws) {
    return diagnostics(scalar_traces(draws));
}

} // namespace stsurv
