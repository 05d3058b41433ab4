#include "thermon/scorer.hpp"

#include <algorithm>
#include <cmath>

#include "thermon/errors.hpp"

namespace thermon {

void ScorerParams::validate() const {
    if (order < 1) throw ConfigError("scorer order must be >= 1");
    if (lambda <= 0.9 || lambda >= 1.0) throw ConfigError("scorer lambda must be in (0.9, 1.0)");
    if (w_short < 1 || w_long <= w_short)
        throw ConfigError("scorer windows must satisfy 1 <= w_short < w_long");
    if (sigma_min <= 0.0) throw ConfigError("scorer sigma_min must be positive");
    if (warmup < order) throw ConfigError("scorer warmup must be >= order");
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

Scorer::Scorer(const ScorerParams& params) : params_(params) {
    params_.validate();
    const std::size_t p = static_cast<std::size_t>(params_.order);
    coeffs_.assign(p, 0.0);
    cov_.assign(p * p, 0.0);
    for (std::size_t i = 0; i < p; ++i) cov_[i * p + i] = 1e3;  // RLS initial covariance
}

void Scorer::push_raw(double raw, bool warm) {
    last_raw_ = raw;
    // Warmup raws are forced to zero; letting them into the windows would
    // bias mu_long low (and the likelihood high) for w_long samples.
    if (!warm) return;
    raw_short_.push_back(raw);
    if (raw_short_.size() > static_cast<std::size_t>(params_.w_short)) raw_short_.pop_front();
    raw_long_.push_back(raw);
    if (raw_long_.size() > static_cast<std::size_t>(params_.w_long)) raw_long_.pop_front();
}

Scorer::StepResult Scorer::update(double x) {
    const std::size_t p = static_cast<std::size_t>(params_.order);
    StepResult result;

    if (history_.size() < p) {
        // Not enough lags for a prediction yet; echo the input.
        result.prediction = x;
        result.raw = 0.0;
        history_.push_front(x);
        push_raw(result.raw, count_ >= params_.warmup);
        ++count_;
        return result;
    }

    // Predict from the current coefficients on the last p values.
    double prediction = 0.0;
    for (std::size_t i = 0; i < p; ++i) prediction += coeffs_[i] * history_[i];
    const double error = x - prediction;

    // sigma_e is the deviation known before this sample is absorbed.
    const double sigma_e = std::max(std::sqrt(err_sq_), params_.sigma_min);
    result.prediction = prediction;
    result.raw = count_ < params_.warmup
                     ? 0.0
                     : std::min(1.0, std::abs(error) / (4.0 * sigma_e));

    // The warmup errors are dominated by the startup transient (coefficients
    // start at zero, so early errors scale with the stream's level); absorbing
    // them would inflate sigma_e far past the floor for hundreds of samples.
    if (count_ >= params_.warmup)
        err_sq_ = params_.lambda * err_sq_ + (1.0 - params_.lambda) * error * error;

    // RLS update: K = P*phi / (lambda + phi'*P*phi); w += K*e; P = (P - K*phi'*P)/lambda.
    std::vector<double> p_phi(p, 0.0);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j) p_phi[i] += cov_[i * p + j] * history_[j];
    double denom = params_.lambda;
    for (std::size_t i = 0; i < p; ++i) denom += history_[i] * p_phi[i];
    for (std::size_t i = 0; i < p; ++i) coeffs_[i] += (p_phi[i] / denom) * error;
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j)
            cov_[i * p + j] = (cov_[i * p + j] - p_phi[i] * p_phi[j] / denom) / params_.lambda;
    // Keep P symmetric against drift.
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = i + 1; j < p; ++j) {
            const double s = 0.5 * (cov_[i * p + j] + cov_[j * p + i]);
            cov_[i * p + j] = cov_[j * p + i] = s;
        }

    history_.push_front(x);
    history_.pop_back();
    push_raw(result.raw, count_ >= params_.warmup);
    ++count_;
    return result;
}

Scorer::StepResult Scorer::skip() {
    StepResult result;
    result.prediction = history_.empty() ? 0.0 : history_.front();
    result.raw = last_raw_;
    return result;
}

double Scorer::likelihood() const {
    // Neutral until the first post-warmup raw score lands in the windows.
    if (raw_short_.empty() || raw_long_.empty()) return 0.5;
    auto mean = [](const std::deque<double>& q) {
        double s = 0.0;
        for (double v : q) s += v;
        return s / static_cast<double>(q.size());
    };
    const double mu_short = mean(raw_short_);
    const double mu_long = mean(raw_long_);
    double var = 0.0;
    for (double v : raw_long_) var += (v - mu_long) * (v - mu_long);
    var /= static_cast<double>(raw_long_.size());
    const double sigma_long = std::max(std::sqrt(var), params_.sigma_min);
    return normal_cdf((mu_short - mu_long) / sigma_long);
}

AnomalyScoreSeries score_stream(const std::string& group_id,
                                const std::vector<std::int64_t>& timestamps,
                                const std::vector<std::optional<double>>& series,
                                const ScorerParams& params) {
    if (series.size() != timestamps.size())
        throw InvariantViolation("score_stream: series/timestamps disagree");
    std::size_t present = 0;
    for (const auto& v : series) present += v.has_value() ? 1 : 0;
    if (present < static_cast<std::size_t>(params.warmup)) throw SeriesShorterThanWarmup();

    AnomalyScoreSeries out;
    out.group_id = group_id;
    out.timestamps = timestamps;
    out.scores.reserve(series.size());
    Scorer scorer(params);
    double last_score = 0.5;
    bool any = false;
    for (const auto& cell : series) {
        if (cell) {
            scorer.update(*cell);
            last_score = scorer.likelihood();
            any = true;
        }
        // Missing cells freeze the state and carry the previous score.
        out.scores.push_back(any ? last_score : 0.5);
    }
    return out;
}

}  // namespace thermon
