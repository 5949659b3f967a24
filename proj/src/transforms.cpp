#include "grouptest/transforms.hpp"

#include <cmath>

namespace grouptest {

std::string to_string(TransformKind kind) {
    switch (kind) {
        case TransformKind::None: return "none";
        case TransformKind::Within: return "within";
        case TransformKind::ForwardOrthogonal: return "fod";
    }
    return "unknown";
}

TransformKind parse_transform(const std::string& s) {
    if (s == "none") return TransformKind::None;
    if (s == "within") return TransformKind::Within;
    if (s == "fod" || s == "forward_orthogonal") return TransformKind::ForwardOrthogonal;
    throw ConfigError("unknown transform '" + s + "' (expected none, within or fod)");
}

PanelDataset within_demean(const PanelDataset& data) {
    const auto n = data.n_units(), t_len = data.n_periods(), k_len = data.n_regressors();
    if (t_len < 2) throw DegenerateError("within transform needs at least 2 periods");

    std::vector<double> y = data.y_data();
    std::vector<double> x = data.x_data();
    const double inv_t = 1.0 / static_cast<double>(t_len);
    std::vector<double> xbar(k_len);
    for (std::size_t i = 0; i < n; ++i) {
        double ybar = 0.0;
        std::fill(xbar.begin(), xbar.end(), 0.0);
        for (std::size_t t = 0; t < t_len; ++t) {
            ybar += y[i * t_len + t];
            for (std::size_t k = 0; k < k_len; ++k) xbar[k] += x[(i * t_len + t) * k_len + k];
        }
        ybar *= inv_t;
        for (auto& v : xbar) v *= inv_t;
        for (std::size_t t = 0; t < t_len; ++t) {
            y[i * t_len + t] -= ybar;
            for (std::size_t k = 0; k < k_len; ++k) x[(i * t_len + t) * k_len + k] -= xbar[k];
        }
    }
    return PanelDataset(n, t_len, k_len, std::move(y), std::move(x), data.unit_ids(), data.time_ids());
}

PanelDataset forward_orthogonal(const PanelDataset& data) {
    const auto n = data.n_units(), t_len = data.n_periods(), k_len = data.n_regressors();
    if (t_len < 2) throw DegenerateError("forward orthogonal deviations need at least 2 periods");
    const auto out_len = t_len - 1;
    const auto cols = k_len + 1;

    std::vector<double> y(n * out_len), x(n * out_len * k_len);
    std::vector<double> tail(cols);  // running sums of w_{t+1..T-1}
    for (std::size_t i = 0; i < n; ++i) {
        auto value = [&](std::size_t t, std::size_t c) {
            return c == 0 ? data.y(i, t) : data.x(i, t, c - 1);
        };
        std::fill(tail.begin(), tail.end(), 0.0);
        for (std::size_t t = t_len - 1; t-- > 0;) {
            for (std::size_t c = 0; c < cols; ++c) tail[c] += value(t + 1, c);
            const double remaining = static_cast<double>(t_len - t - 1);
            const double scale = std::sqrt(remaining / (remaining + 1.0));
            for (std::size_t c = 0; c < cols; ++c) {
                const double dev = scale * (value(t, c) - tail[c] / remaining);
                if (c == 0)
                    y[i * out_len + t] = dev;
                else
                    x[(i * out_len + t) * k_len + c - 1] = dev;
            }
        }
    }
    std::vector<std::string> times(data.time_ids().begin(), data.time_ids().end() - 1);
    return PanelDataset(n, out_len, k_len, std::move(y), std::move(x), data.unit_ids(), std::move(times));
}

PanelDataset apply_transform(const PanelDataset& data, TransformKind kind) {
    switch (kind) {
        case TransformKind::None: return data;
        case TransformKind::Within: return within_demean(data);
        case TransformKind::ForwardOrthogonal: return forward_orthogonal(data);
    }
    return data;
}

}  // namespace grouptest
