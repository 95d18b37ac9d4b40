#pragma once

#include <span>
#include <string>

#include "ratex/data.hpp"
#include "ratex/model.hpp"

namespace ratex::cli {

/// Self-contained HTML page highlighting each document's predicted rationale.
/// Every token is a span titled with its score; class `gold` underlines gold
/// rationale tokens, `tp` and `fp` mark predicted tokens that are and are not
/// gold. Predictions must follow the dataset's document order.
std::string render_html_report(const Dataset& dataset, std::span<const Prediction> predictions,
                               const std::string& title);

}  // namespace ratex::cli
