#pragma once

// Removal of unit-specific intercepts ahead of the tests.

#include <string>

#include "grouptest/panel.hpp"

namespace grouptest {

enum class TransformKind { None, Within, ForwardOrthogonal };

std::string to_string(TransformKind kind);
/// Accepts none, within, fod / forward_orthogonal.
TransformKind parse_transform(const std::string& s);

/// M0 = I - T^{-1} 1 1' applied to y and every regressor column, per unit.
PanelDataset within_demean(const PanelDataset& data);

/// Forward orthogonal deviations. Output period t (0-based, t < T-1) is
/// c_t (w_t - mean(w_{t+1..T-1})) with c_t = sqrt((T-t-1)/(T-t)).
PanelDataset forward_orthogonal(const PanelDataset& data);

PanelDataset apply_transform(const PanelDataset& data, TransformKind kind);

}  // namespace grouptest
