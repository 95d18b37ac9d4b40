#include "html_report.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace ratex::cli {

namespace {

std::string escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&#39;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

constexpr const char* kStyle = R"(body{font-family:Georgia,serif;max-width:60em;margin:2em auto;line-height:1.7;color:#222}
h1{font-size:1.4em}
h2{font-size:1em;font-family:monospace;margin-bottom:.2em}
.doc{border-top:1px solid #ccc;padding:.5em 0}
.meta{font-family:monospace;font-size:.85em;color:#555}
.gold{text-decoration:underline;text-decoration-thickness:2px}
.tp{background:#9be39b}
.fp{background:#f3a6a6}
.legend span{margin-right:1.5em})";

}  // namespace

std::string render_html_report(const Dataset& dataset, std::span<const Prediction> predictions,
                               const std::string& title) {
  if (predictions.size() != dataset.size()) throw std::invalid_argument("render_html_report: size mismatch");
  std::ostringstream out;
  out << "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n<title>" << escape(title)
      << "</title>\n<style>\n" << kStyle << "\n</style>\n</head>\n<body>\n<h1>" << escape(title) << "</h1>\n"
      << "<p class=\"legend\"><span class=\"tp\">true positive</span><span class=\"fp\">false positive</span>"
      << "<span class=\"gold\">gold rationale</span></p>\n";
  for (std::size_t d = 0; d < dataset.size(); ++d) {
    const Document& doc = dataset.documents[d];
    const Prediction& p = predictions[d];
    const auto tokens = doc.flat_tokens();
    const auto gold = doc.flat_token_labels();
    if (p.doc_id != doc.doc_id || p.token_scores.size() != tokens.size() ||
        p.binary_rationale.size() != tokens.size()) {
      throw std::invalid_argument("render_html_report: prediction does not match document '" + doc.doc_id + "'");
    }
    out << "<div class=\"doc\">\n<h2>" << escape(doc.doc_id) << "</h2>\n<div class=\"meta\">label " << doc.doc_label
        << ", y_hat " << fixed4(p.y_hat) << "</div>\n<p>";
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      const bool is_gold = !gold.empty() && gold[i] == 1;
      const bool predicted = p.binary_rationale[i] == 1;
      std::string cls;
      if (is_gold) cls = "gold";
      if (predicted) cls += cls.empty() ? (is_gold ? "tp" : "fp") : (is_gold ? " tp" : " fp");
      if (i) out << ' ';
      out << "<span";
      if (!cls.empty()) out << " class=\"" << cls << '"';
      out << " title=\"" << fixed4(p.token_scores[i]) << "\">" << escape(tokens[i]) << "</span>";
    }
    out << "</p>\n</div>\n";
  }
  out << "</body>\n</html>\n";
  return out.str();
}

}  // namespace ratex::cli
