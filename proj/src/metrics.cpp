#include "leafnet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "leafnet/errors.hpp"

namespace leafnet {

ConfusionMatrix::ConfusionMatrix(std::size_t classes, std::vector<std::string> names)
    : classes_(classes), names_(std::move(names)), counts_(classes * classes, 0) {
    if (classes == 0) {
        throw ParameterError("confusion matrix needs at least one class");
    }
    if (names_.empty()) {
        for (std::size_t k = 0; k < classes; ++k) {
            names_.push_back(std::to_string(k));
        }
    }
    if (names_.size() != classes) {
        throw ParameterError("confusion matrix has " + std::to_string(classes) + " classes but " +
                             std::to_string(names_.size()) + " names");
    }
}

std::uint64_t ConfusionMatrix::at(std::size_t truth, std::size_t predicted) const {
    if (truth >= classes_ || predicted >= classes_) {
        throw ParameterError("class id out of range");
    }
    return counts_[truth * classes_ + predicted];
}

void ConfusionMatrix::add(std::size_t truth, std::size_t predicted, std::uint64_t count) {
    if (truth >= classes_ || predicted >= classes_) {
        throw ParameterError("class id (" + std::to_string(truth) + ", " + std::to_string(predicted) +
                             ") out of range for " + std::to_string(classes_) + " classes");
    }
    counts_[truth * classes_ + predicted] += count;
}

std::uint64_t ConfusionMatrix::total() const {
    std::uint64_t t = 0;
    for (std::uint64_t c : counts_) {
        t += c;
    }
    return t;
}

std::uint64_t ConfusionMatrix::trace() const {
    std::uint64_t t = 0;
    for (std::size_t k = 0; k < classes_; ++k) {
        t += counts_[k * classes_ + k];
    }
    return t;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t truth) const {
    std::uint64_t t = 0;
    for (std::size_t p = 0; p < classes_; ++p) {
        t += at(truth, p);
    }
    return t;
}

std::uint64_t ConfusionMatrix::column_sum(std::size_t predicted) const {
    std::uint64_t t = 0;
    for (std::size_t r = 0; r < classes_; ++r) {
        t += at(r, predicted);
    }
    return t;
}

ConfusionMatrix confusion_matrix(std::span<const std::size_t> predictions, std::span<const std::size_t> labels,
                                 std::size_t classes, std::vector<std::string> names) {
    if (predictions.size() != labels.size()) {
        throw ParameterError("confusion matrix: " + std::to_string(predictions.size()) + " predictions for " +
                             std::to_string(labels.size()) + " labels");
    }
    ConfusionMatrix cm(classes, std::move(names));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        cm.add(labels[i], predictions[i]);
    }
    return cm;
}

double accuracy(const ConfusionMatrix& cm) {
    const std::uint64_t total = cm.total();
    if (total == 0) {
        throw ParameterError("accuracy of an empty confusion matrix");
    }
    return static_cast<double>(cm.trace()) / static_cast<double>(total);
}

ClassMetrics per_class_prf(const ConfusionMatrix& cm, std::size_t k) {
    if (k >= cm.classes()) {
        throw ParameterError("class id " + std::to_string(k) + " out of range");
    }
    const std::uint64_t tp = cm.at(k, k);
    const std::uint64_t predicted = cm.column_sum(k);
    const std::uint64_t actual = cm.row_sum(k);
    ClassMetrics m;
    m.support = actual;
    if (predicted > 0) {
        m.precision = static_cast<double>(tp) / static_cast<double>(predicted);
    } else {
        m.zero_division = true;
    }
    if (actual > 0) {
        m.recall = static_cast<double>(tp) / static_cast<double>(actual);
    } else {
        m.zero_division = true;
    }
    if (m.precision + m.recall > 0.0) {
        m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    } else {
        m.zero_division = true;
    }
    return m;
}

Aggregates aggregates(const ConfusionMatrix& cm) {
    Aggregates a;
    a.accuracy = accuracy(cm);
    a.support = cm.total();
    const double k = static_cast<double>(cm.classes());
    const double n = static_cast<double>(a.support);
    for (std::size_t c = 0; c < cm.classes(); ++c) {
        const ClassMetrics m = per_class_prf(cm, c);
        a.macro.precision += m.precision / k;
        a.macro.recall += m.recall / k;
        a.macro.f1 += m.f1 / k;
        const double w = static_cast<double>(m.support) / n;
        a.weighted.precision += w * m.precision;
        a.weighted.recall += w * m.recall;
        a.weighted.f1 += w * m.f1;
    }
    return a;
}

ClassReport make_report(const ConfusionMatrix& cm) {
    ClassReport r;
    r.names = cm.names();
    for (std::size_t c = 0; c < cm.classes(); ++c) {
        r.classes.push_back(per_class_prf(cm, c));
    }
    r.summary = aggregates(cm);
    return r;
}

std::string format_metric(double value) {
    // The 1e-9 nudge keeps decimal ties such as 0.285 (stored as 0.28499..) rounding up.
    const double hundredths = std::floor(value * 100.0 + 0.5 + 1e-9);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", hundredths / 100.0);
    return buf;
}

std::string format_report(const ClassReport& report) {
    std::size_t width = std::string("weighted avg").size();
    for (const std::string& name : report.names) {
        width = std::max(width, name.size());
    }
    const int w = static_cast<int>(width);
    char buf[512];
    std::ostringstream out;
    std::snprintf(buf, sizeof buf, "%*s  %9s %9s %9s %9s\n\n", w, "", "precision", "recall", "f1-score",
                  "support");
    out << buf;
    bool zero_division = false;
    for (std::size_t c = 0; c < report.classes.size(); ++c) {
        const ClassMetrics& m = report.classes[c];
        zero_division = zero_division || m.zero_division;
        std::snprintf(buf, sizeof buf, "%*s  %9s %9s %9s %9llu\n", w, report.names.at(c).c_str(),
                      format_metric(m.precision).c_str(), format_metric(m.recall).c_str(),
                      format_metric(m.f1).c_str(), static_cast<unsigned long long>(m.support));
        out << buf;
    }
    const Aggregates& a = report.summary;
    const auto total = static_cast<unsigned long long>(a.support);
    std::snprintf(buf, sizeof buf, "\n%*s  %9s %9s %9s %9llu\n", w, "accuracy", "", "",
                  format_metric(a.accuracy).c_str(), total);
    out << buf;
    std::snprintf(buf, sizeof buf, "%*s  %9s %9s %9s %9llu\n", w, "macro avg", format_metric(a.macro.precision).c_str(),
                  format_metric(a.macro.recall).c_str(), format_metric(a.macro.f1).c_str(), total);
    out << buf;
    std::snprintf(buf, sizeof buf, "%*s  %9s %9s %9s %9llu\n", w, "weighted avg",
                  format_metric(a.weighted.precision).c_str(), format_metric(a.weighted.recall).c_str(),
                  format_metric(a.weighted.f1).c_str(), total);
    out << buf;
    if (zero_division) {
        out << "\nnote: metrics with a zero denominator are reported as 0.00\n";
    }
    return out.str();
}

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    return out + "\"";
}

std::vector<std::string> parse_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (quoted) {
        throw ParameterError("confusion CSV: unterminated quoted field");
    }
    fields.push_back(std::move(cur));
    return fields;
}

}  // namespace

std::string cm_to_csv(const ConfusionMatrix& cm) {
    std::ostringstream out;
    out << "true_label";
    for (const std::string& name : cm.names()) {
        out << ',' << csv_field(name);
    }
    out << '\n';
    for (std::size_t r = 0; r < cm.classes(); ++r) {
        out << csv_field(cm.names()[r]);
        for (std::size_t c = 0; c < cm.classes(); ++c) {
            out << ',' << cm.at(r, c);
        }
        out << '\n';
    }
    return out.str();
}

ConfusionMatrix cm_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) {
        throw ParameterError("confusion CSV: missing header");
    }
    std::vector<std::string> header = parse_csv_line(line);
    if (header.size() < 2 || header.front() != "true_label") {
        throw ParameterError("confusion CSV: malformed header");
    }
    std::vector<std::string> names(header.begin() + 1, header.end());
    const std::size_t k = names.size();
    ConfusionMatrix cm(k, names);
    for (std::size_t r = 0; r < k; ++r) {
        if (!std::getline(in, line)) {
            throw ParameterError("confusion CSV: expected " + std::to_string(k) + " rows");
        }
        const std::vector<std::string> fields = parse_csv_line(line);
        if (fields.size() != k + 1 || fields.front() != names[r]) {
            throw ParameterError("confusion CSV: malformed row " + std::to_string(r + 1));
        }
        for (std::size_t c = 0; c < k; ++c) {
            std::size_t used = 0;
            const unsigned long long v = std::stoull(fields[c + 1], &used);
            if (used != fields[c + 1].size()) {
                throw ParameterError("confusion CSV: bad count '" + fields[c + 1] + "'");
            }
            cm.add(r, c, v);
        }
    }
    return cm;
}

}  // namespace leafnet
