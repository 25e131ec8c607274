#include "stsurv/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "stsurv/error.hpp"

namespace stsurv {

namespace {

constexpr double kTargetAcceptance = 0.44;
constexpr int kRefreshEvery = 100;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double logit(double p) { return std::log(p / (1.0 - p)); }

/// Per-site proposal scale with Robbins-Monro adaptation on the log scale.
struct Proposal {
    double log_scale = std::log(0.1);

    [[nodiscard]] double scale() const { return std::exp(log_scale); }
    void adapt(bool accepted, double gain) {
        log_scale += gain * ((accepted ? 1.0 : 0.0) - kTargetAcceptance);
        log_scale = std::clamp(log_scale, -20.0, 3.0);
    }
};

struct BlockCounter {
    long accepted = 0;
    long proposed = 0;
    [[nodiscard]] double rate() const {
        return proposed == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(proposed);
    }
};

class Chain {
public:
    Chain(const SurveillanceDataset& dataset, const LerouxField& field, const SplineBasis& basis,
          const RunConfig& config, int chain_id)
        : data_(dataset), field_(field), basis_(basis), config_(config), opt_(config.model),
          chain_id_(chain_id), I_(dataset.num_areas()), J_(dataset.num_days()),
          K_(basis.num_functions) {
        std::seed_seq seq{static_cast<std::uint64_t>(config.seed & 0xffffffffu),
                          static_cast<std::uint64_t>(config.seed >> 32),
                          static_cast<std::uint64_t>(chain_id)};
        rng_.seed(seq);

        counts_ = dataset.counts.cast<double>();
        log_pop_.resize(I_);
        for (int i = 0; i < I_; ++i) {
            log_pop_[i] = std::log(dataset.populations[static_cast<std::size_t>(i)]);
        }
        days_by_dow_.resize(kDaysPerWeek);
        for (int j = 0; j < J_; ++j) {
            days_by_dow_[static_cast<std::size_t>(dow(j + 1) - 1)].push_back(j);
        }

        gamma_prop_.resize(kDaysPerWeek);
        mu_prop_.resize(static_cast<std::size_t>(K_));
        shift_prop_.resize(static_cast<std::size_t>(K_));
        beta_prop_.resize(static_cast<std::size_t>(I_ * K_));
        eps_prop_.resize(static_cast<std::size_t>(I_ * J_));
        sigma_beta_prop_.resize(static_cast<std::size_t>(K_));
        scale_beta_prop_.resize(static_cast<std::size_t>(K_));
        rho_prop_.resize(static_cast<std::size_t>(opt_.rho_mode == RhoMode::common ? 1 : K_));
        buffer_.resize(static_cast<std::size_t>(J_));

        initialize();
    }

    void run(std::vector<Draw>& out, const SamplerSettings& settings, std::mutex& log_mutex) {
        const int total = config_.iterations_per_chain;
        const int report_every = std::max(1, total / 10);
        for (int t = 1; t <= total; ++t) {
            adapting_ = t <= config_.burn_in;
            gain_ = 1.0 / std::pow(static_cast<double>(t), 0.6);
            iterate();
            if (t % kRefreshEvery == 0) {
                refresh_cache();
            }
            if (t > config_.burn_in && (t - config_.burn_in) % config_.thin == 0) {
                Draw d{chain_id_, t, state_};
                if (!settings.keep_eps) {
                    d.state.eps.resize(0, 0);
                }
                out.push_back(std::move(d));
            }
            if (t == config_.burn_in) {
                counters_.clear();
            }
            if (settings.progress && settings.log != nullptr && t % report_every == 0) {
                std::lock_guard lock(log_mutex);
                *settings.log << "chain " << chain_id_ + 1 << " iteration " << t << "/" << total
                              << (adapting_ ? " (burn-in)" : "") << " acceptance:";
                for (const auto& [name, c] : counters_) {
                    *settings.log << ' ' << name << '=' << std::round(c.rate() * 100) / 100;
                }
                *settings.log << '\n';
            }
        }
    }

    [[nodiscard]] std::map<std::string, double> acceptance() const {
        std::map<std::string, double> out;
        for (const auto& [name, c] : counters_) {
            out[name] = c.rate();
        }
        return out;
    }

private:
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }
    bool accept(double log_ratio) {
        if (log_ratio >= 0.0) {
            return true;
        }
        return std::log(std::uniform_real_distribution<double>(0.0, 1.0)(rng_)) < log_ratio;
    }
    void record(const char* block, Proposal& prop, bool accepted) {
        auto& c = counters_[block];
        ++c.proposed;
        c.accepted += accepted ? 1 : 0;
        if (adapting_) {
            prop.adapt(accepted, gain_);
        }
    }

    double location_log_prior(double x) const {
        if (opt_.location_prior_sd <= 0.0) {
            return 0.0;
        }
        const double z = x / opt_.location_prior_sd;
        return -0.5 * z * z;
    }

    void initialize() {
        state_ = make_state(I_, K_, J_, opt_.rho_mode);
        const double jitter = 0.1;
        double center = 0.0;
        if (opt_.use_likelihood) {
            double total_pop = 0.0;
            for (double p : data_.populations) {
                total_pop += p;
            }
            center = std::log((counts_.sum() + 0.5) / (total_pop * J_));
        }
        if (opt_.use_day_of_week) {
            for (int d = 1; d < kDaysPerWeek; ++d) {
                state_.gamma[d] = jitter * normal();
            }
        }
        for (int k = 0; k < K_; ++k) {
            state_.mu[k] = center + jitter * normal();
        }
        for (int k = 0; k < K_; ++k) {
            for (int i = 0; i < I_; ++i) {
                state_.beta_star(i, k) = jitter * normal();
            }
        }
        if (opt_.use_overdispersion) {
            for (int j = 0; j < J_; ++j) {
                for (int i = 0; i < I_; ++i) {
                    state_.eps(i, j) = jitter * normal();
                }
            }
        }
        state_.sigma_beta.setConstant(opt_.fixed_sigma_beta.value_or(0.5));
        state_.sigma_eps = 0.5;
        state_.rho.setConstant(opt_.fixed_rho.value_or(0.5));
        refresh_cache();

        const double lp = log_posterior(state_, data_, basis_, field_, opt_);
        if (!std::isfinite(lp)) {
            std::ostringstream msg;
            msg << "chain " << chain_id_ + 1 << ": non-finite log posterior at initialization ("
                << lp << "); mu = [" << state_.mu.transpose() << "], sigma_beta = ["
                << state_.sigma_beta.transpose() << "], sigma_eps = " << state_.sigma_eps
                << ", rho = [" << state_.rho.transpose() << "], max log intensity = "
                << eta_.maxCoeff();
            throw std::runtime_error(msg.str());
        }
    }

    void refresh_cache() {
        eta_ = spline_trend(state_, basis_);
        for (int j = 0; j < J_; ++j) {
            const double g = opt_.use_day_of_week ? state_.gamma[dow(j + 1) - 1] : 0.0;
            for (int i = 0; i < I_; ++i) {
                eta_(i, j) += log_pop_[i] + g + (opt_.use_overdispersion ? state_.eps(i, j) : 0.0);
            }
        }
        lambda_ = eta_.array().exp().matrix();
    }

    void iterate() {
        if (opt_.use_day_of_week) {
            for (int d = 1; d < kDaysPerWeek; ++d) {
                update_gamma(d);
            }
        }
        for (int k = 0; k < K_; ++k) {
            update_mu(k);
            update_shift(k);
        }
        for (int k = 0; k < K_; ++k) {
            for (int i = 0; i < I_; ++i) {
                update_beta(i, k);
            }
        }
        if (opt_.use_overdispersion) {
            for (int j = 0; j < J_; ++j) {
                for (int i = 0; i < I_; ++i) {
                    update_eps(i, j);
                }
            }
        }
        if (!opt_.fixed_sigma_beta) {
            for (int k = 0; k < K_; ++k) {
                update_sigma_beta(k);
                rescale_beta_column(k);
            }
        }
        if (opt_.use_overdispersion) {
            update_sigma_eps();
            rescale_eps();
        }
        if (!opt_.fixed_rho) {
            update_rho();
        }
    }

    // Shift every cell of day-of-week d by delta.
    void update_gamma(int d) {
        auto& prop = gamma_prop_[static_cast<std::size_t>(d)];
        const double delta = prop.scale() * normal();
        const double cur = state_.gamma[d];
        double dll = 0.0;
        const double e = std::exp(delta);
        if (opt_.use_likelihood) {
            double o_sum = 0.0;
            double l_sum = 0.0;
            for (int j : days_by_dow_[static_cast<std::size_t>(d)]) {
                o_sum += counts_.col(j).sum();
                l_sum += lambda_.col(j).sum();
            }
            dll = delta * o_sum - (e - 1.0) * l_sum;
        }
        const double ratio = dll + location_log_prior(cur + delta) - location_log_prior(cur);
        const bool ok = accept(ratio);
        if (ok) {
            state_.gamma[d] = cur + delta;
            for (int j : days_by_dow_[static_cast<std::size_t>(d)]) {
                eta_.col(j).array() += delta;
                lambda_.col(j) *= e;
            }
        }
        record("gamma", prop, ok);
    }

    // Likelihood change when every area's predictor moves by delta * X(k, j).
    double all_area_delta(int k, double delta) {
        const auto [first, last] = basis_.support[static_cast<std::size_t>(k)];
        double dll = 0.0;
        for (int j = first; j <= last; ++j) {
            const double x = basis_.design(k, j);
            const double e = std::exp(delta * x);
            buffer_[static_cast<std::size_t>(j)] = e;
            dll += delta * x * counts_.col(j).sum() - (e - 1.0) * lambda_.col(j).sum();
        }
        return dll;
    }

    void apply_all_area_delta(int k, double delta) {
        const auto [first, last] = basis_.support[static_cast<std::size_t>(k)];
        for (int j = first; j <= last; ++j) {
            eta_.col(j).array() += delta * basis_.design(k, j);
            lambda_.col(j) *= buffer_[static_cast<std::size_t>(j)];
        }
    }

    void update_mu(int k) {
        auto& prop = mu_prop_[static_cast<std::size_t>(k)];
        const double delta = prop.scale() * normal();
        const double cur = state_.mu[k];
        const double dll = opt_.use_likelihood ? all_area_delta(k, delta) : 0.0;
        const double ratio = dll + location_log_prior(cur + delta) - location_log_prior(cur);
        const bool ok = accept(ratio);
        if (ok) {
            state_.mu[k] = cur + delta;
            if (opt_.use_likelihood) {
                apply_all_area_delta(k, delta);
            } else {
                eta_ += delta * Eigen::VectorXd::Ones(I_) * basis_.design.row(k);
            }
        }
        record("mu", prop, ok);
    }

    // mu_k += delta, beta_star(., k) -= delta. beta = mu + beta_star is
    // unchanged, so only the priors move.
    void update_shift(int k) {
        auto& prop = shift_prop_[static_cast<std::size_t>(k)];
        const double delta = prop.scale() * normal();
        const double rho = state_.rho_for(k);
        const double s2 = state_.sigma_beta[k] * state_.sigma_beta[k];
        const double col_sum = state_.beta_star.col(k).sum();
        const double d_sum_sq = -2.0 * delta * col_sum + I_ * delta * delta;
        const double ratio = -(1.0 - rho) * d_sum_sq / (2.0 * s2) +
                             location_log_prior(state_.mu[k] + delta) -
                             location_log_prior(state_.mu[k]);
        const bool ok = accept(ratio);
        if (ok) {
            state_.mu[k] += delta;
            state_.beta_star.col(k).array() -= delta;
        }
        record("shift", prop, ok);
    }

    void update_beta(int i, int k) {
        auto& prop = beta_prop_[static_cast<std::size_t>(k * I_ + i)];
        const double delta = prop.scale() * normal();
        const double cur = state_.beta_star(i, k);
        const double sigma = state_.sigma_beta[k];
        const std::span<const double> column(state_.beta_star.col(k).data(),
                                             static_cast<std::size_t>(I_));
        const auto cm = field_.conditional_moments(column, i, state_.rho_for(k), sigma * sigma);
        const double next = cur + delta;
        const double dprior =
            -((next - cm.mean) * (next - cm.mean) - (cur - cm.mean) * (cur - cm.mean)) /
            (2.0 * cm.variance);

        const auto [first, last] = basis_.support[static_cast<std::size_t>(k)];
        double dll = 0.0;
        if (opt_.use_likelihood) {
            for (int j = first; j <= last; ++j) {
                const double step = delta * basis_.design(k, j);
                const double e = std::exp(step);
                buffer_[static_cast<std::size_t>(j)] = e;
                dll += step * counts_(i, j) - (e - 1.0) * lambda_(i, j);
            }
        }
        const bool ok = accept(dll + dprior);
        if (ok) {
            state_.beta_star(i, k) = next;
            for (int j = first; j <= last; ++j) {
                eta_(i, j) += delta * basis_.design(k, j);
                if (opt_.use_likelihood) {
                    lambda_(i, j) *= buffer_[static_cast<std::size_t>(j)];
                }
            }
        }
        record("beta_star", prop, ok);
    }

    void update_eps(int i, int j) {
        auto& prop = eps_prop_[static_cast<std::size_t>(j * I_ + i)];
        const double delta = prop.scale() * normal();
        const double cur = state_.eps(i, j);
        const double next = cur + delta;
        const double s2 = state_.sigma_eps * state_.sigma_eps;
        const double dprior = -(next * next - cur * cur) / (2.0 * s2);
        double dll = 0.0;
        double e = 1.0;
        if (opt_.use_likelihood) {
            e = std::exp(delta);
            dll = delta * counts_(i, j) - (e - 1.0) * lambda_(i, j);
        }
        const bool ok = accept(dll + dprior);
        if (ok) {
            state_.eps(i, j) = next;
            eta_(i, j) += delta;
            lambda_(i, j) *= e;
        }
        record("eps", prop, ok);
    }

    FieldQuadratics column_quadratics(int k) const {
        return field_.quadratics(std::span<const double>(state_.beta_star.col(k).data(),
                                                         static_cast<std::size_t>(I_)));
    }

    void update_sigma_beta(int k) {
        auto& prop = sigma_beta_prop_[static_cast<std::size_t>(k)];
        const double step = prop.scale() * normal();
        const double cur = state_.sigma_beta[k];
        const double next = cur * std::exp(step);
        bool ok = false;
        if (next <= opt_.sd_upper) {
            const auto q = column_quadratics(k);
            const double rho = state_.rho_for(k);
            const double ratio = field_.log_density(q, rho, next * next) -
                                 field_.log_density(q, rho, cur * cur) + step;
            ok = accept(ratio);
        }
        if (ok) {
            state_.sigma_beta[k] = next;
        }
        record("sigma_beta", prop, ok);
    }

    // (sigma_k, beta_star(., k)) -> exp(z) * (sigma_k, beta_star(., k)). The
    // prior ratio and Jacobian combine to exp(z).
    void rescale_beta_column(int k) {
        auto& prop = scale_beta_prop_[static_cast<std::size_t>(k)];
        const double z = prop.scale() * normal();
        const double f = std::exp(z);
        const double next_sigma = state_.sigma_beta[k] * f;
        bool ok = false;
        const auto [first, last] = basis_.support[static_cast<std::size_t>(k)];
        if (next_sigma <= opt_.sd_upper) {
            double dll = 0.0;
            if (opt_.use_likelihood) {
                for (int i = 0; i < I_; ++i) {
                    const double d_beta = (f - 1.0) * state_.beta_star(i, k);
                    for (int j = first; j <= last; ++j) {
                        const double step = d_beta * basis_.design(k, j);
                        dll += step * counts_(i, j) - std::expm1(step) * lambda_(i, j);
                    }
                }
            }
            ok = accept(dll + z);
        }
        if (ok) {
            for (int i = 0; i < I_; ++i) {
                const double d_beta = (f - 1.0) * state_.beta_star(i, k);
                state_.beta_star(i, k) *= f;
                for (int j = first; j <= last; ++j) {
                    const double step = d_beta * basis_.design(k, j);
                    eta_(i, j) += step;
                    lambda_(i, j) *= std::exp(step);
                }
            }
            state_.sigma_beta[k] = next_sigma;
        }
        record("scale_beta", prop, ok);
    }

    void update_sigma_eps() {
        const double step = sigma_eps_prop_.scale() * normal();
        const double cur = state_.sigma_eps;
        const double next = cur * std::exp(step);
        bool ok = false;
        if (next <= opt_.sd_upper) {
            const double n = static_cast<double>(I_) * J_;
            const double ss = state_.eps.squaredNorm();
            const double ratio = -n * step - ss / (2.0 * next * next) + ss / (2.0 * cur * cur) + step;
            ok = accept(ratio);
        }
        if (ok) {
            state_.sigma_eps = next;
        }
        record("sigma_eps", sigma_eps_prop_, ok);
    }

    void rescale_eps() {
        const double z = scale_eps_prop_.scale() * normal();
        const double f = std::exp(z);
        const double next_sigma = state_.sigma_eps * f;
        bool ok = false;
        if (next_sigma <= opt_.sd_upper) {
            double dll = 0.0;
            if (opt_.use_likelihood) {
                for (int j = 0; j < J_; ++j) {
                    for (int i = 0; i < I_; ++i) {
                        const double step = (f - 1.0) * state_.eps(i, j);
                        dll += step * counts_(i, j) - std::expm1(step) * lambda_(i, j);
                    }
                }
            }
            ok = accept(dll + z);
        }
        if (ok) {
            for (int j = 0; j < J_; ++j) {
                for (int i = 0; i < I_; ++i) {
                    const double step = (f - 1.0) * state_.eps(i, j);
                    state_.eps(i, j) *= f;
                    eta_(i, j) += step;
                    lambda_(i, j) *= std::exp(step);
                }
            }
            state_.sigma_eps = next_sigma;
        }
        record("scale_eps", scale_eps_prop_, ok);
    }

    // rho = kRhoMax * sigmoid(x); random walk on x.
    void update_rho() {
        const auto log_jacobian = [](double x) {
            const double s = sigmoid(x);
            return std::log(s) + std::log1p(-s);
        };
        const auto n_rho = static_cast<int>(state_.rho.size());
        std::vector<FieldQuadratics> q(static_cast<std::size_t>(K_));
        for (int k = 0; k < K_; ++k) {
            q[static_cast<std::size_t>(k)] = column_quadratics(k);
        }
        for (int r = 0; r < n_rho; ++r) {
            auto& prop = rho_prop_[static_cast<std::size_t>(r)];
            const double cur = state_.rho[r];
            const double x = logit(cur / kRhoMax);
            const double x_next = x + prop.scale() * normal();
            const double next = kRhoMax * sigmoid(x_next);
            bool ok = false;
            if (next > 0.0 && next <= kRhoMax) {
                double ratio = log_jacobian(x_next) - log_jacobian(x);
                for (int k = 0; k < K_; ++k) {
                    if (n_rho > 1 && k != r) {
                        continue;
                    }
                    const double s2 = state_.sigma_beta[k] * state_.sigma_beta[k];
                    ratio += field_.log_density(q[static_cast<std::size_t>(k)], next, s2) -
                             field_.log_density(q[static_cast<std::size_t>(k)], cur, s2);
                }
                ok = accept(ratio);
            }
            if (ok) {
                state_.rho[r] = next;
            }
            record("rho", prop, ok);
        }
    }

    const SurveillanceDataset& data_;
    const LerouxField& field_;
    const SplineBasis& basis_;
    const RunConfig& config_;
    const ModelOptions& opt_;
    int chain_id_;
    int I_;
    int J_;
    int K_;

    std::mt19937_64 rng_;
    ModelState state_;
    Eigen::MatrixXd counts_;
    Eigen::VectorXd log_pop_;
    Eigen::MatrixXd eta_;
    Eigen::MatrixXd lambda_;
    std::vector<std::vector<int>> days_by_dow_;
    std::vector<double> buffer_;

    std::vector<Proposal> gamma_prop_;
    std::vector<Proposal> mu_prop_;
    std::vector<Proposal> shift_prop_;
    std::vector<Proposal> beta_prop_;
    std::vector<Proposal> eps_prop_;
    std::vector<Proposal> sigma_beta_prop_;
    std::vector<Proposal> scale_beta_prop_;
    std::vector<Proposal> rho_prop_;
    Proposal sigma_eps_prop_;
    Proposal scale_eps_prop_;

    std::map<std::string, BlockCounter> counters_;
    bool adapting_ = true;
    double gain_ = 1.0;
};

} // namespace

int PosteriorDraws::draws_per_chain() const {
    return num_chains == 0 ? 0 : static_cast<int>(draws.size()) / num_chains;
}

PosteriorDraws fit(const SurveillanceDataset& dataset, const LerouxField& field,
                   const SplineBasis& basis, const RunConfig& config,
                   const SamplerSettings& settings) {
    config.validate();
    dataset.validate();
    if (field.size() != dataset.num_areas()) {
        throw ValidationError("adjacency graph size does not match the number of areas");
    }
    if (basis.num_days != dataset.num_days()) {
        throw ValidationError("spline basis length does not match the number of days");
    }

    const int chains = config.chains;
    std::vector<std::vector<Draw>> per_chain(static_cast<std::size_t>(chains));
    std::vector<std::map<std::string, double>> acceptance(static_cast<std::size_t>(chains));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(chains));
    std::mutex log_mutex;

    const auto run_chain = [&](int c) {
        const auto idx = static_cast<std::size_t>(c);
        try {
            Chain chain(dataset, field, basis, config, c);
            chain.run(per_chain[idx], settings, log_mutex);
            acceptance[idx] = chain.acceptance();
        } catch (...) {
            errors[idx] = std::current_exception();
        }
    };

    if (settings.parallel && chains > 1) {
        std::vector<std::thread> threads;
        threads.reserve(static_cast<std::size_t>(chains));
        for (int c = 0; c < chains; ++c) {
            threads.emplace_back(run_chain, c);
        }
        for (auto& t : threads) {
            t.join();
        }
    } else {
        for (int c = 0; c < chains; ++c) {
            run_chain(c);
        }
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }

    PosteriorDraws out;
    out.num_chains = chains;
    out.iterations = config.iterations_per_chain;
    out.burn_in = config.burn_in;
    out.thin = config.thin;
    out.has_eps = settings.keep_eps;
    out.options = config.model;
    out.acceptance = std::move(acceptance);
    for (auto& chain_draws : per_chain) {
        for (auto& d : chain_draws) {
            out.draws.push_back(std::move(d));
        }
    }
    return out;
}

} // namespace stsurv
