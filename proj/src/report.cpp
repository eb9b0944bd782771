#include "honet/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "json.hpp"

namespace honet {

CsvWriter::CsvWriter(std::vector<std::string> columns) : columns_(columns.size()) {
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (i) text_ += ",";
        text_ += columns[i];
    }
    text_ += "\n";
}

void CsvWriter::row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_)
        throw contract_error("csv: row has " + std::to_string(cells.size()) + " cells, header has " +
                             std::to_string(columns_));
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) text_ += ",";
        text_ += cells[i];
    }
    text_ += "\n";
}

void CsvWriter::save(const std::string& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw format_error("csv: cannot open '" + path + "'");
    out << text_;
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// ---------------------------------------------------------------- svg

Svg::Svg(double width, double height) : width_(width), height_(height) {}

namespace {
std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}
}  // namespace

void Svg::line(double x1, double y1, double x2, double y2, const std::string& stroke,
               double stroke_width) {
    body_ += "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) + "\" y2=\"" +
             num(y2) + "\" stroke=\"" + stroke + "\" stroke-width=\"" + num(stroke_width) + "\"/>\n";
}

void Svg::rect(double x, double y, double w, double h, const std::string& fill) {
    body_ += "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(w) + "\" height=\"" +
             num(h) + "\" fill=\"" + fill + "\"/>\n";
}

void Svg::polyline(const std::vector<std::pair<double, double>>& pts, const std::string& stroke) {
    body_ += "<polyline fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"1.5\" points=\"";
    for (const auto& [x, y] : pts) body_ += num(x) + "," + num(y) + " ";
    body_ += "\"/>\n";
}

void Svg::circle(double cx, double cy, double r, const std::string& fill) {
    body_ += "<circle cx=\"" + num(cx) + "\" cy=\"" + num(cy) + "\" r=\"" + num(r) + "\" fill=\"" +
             fill + "\"/>\n";
}

void Svg::text(double x, double y, const std::string& s, int size, const std::string& anchor) {
    body_ += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-size=\"" + std::to_string(size) +
             "\" font-family=\"sans-serif\" text-anchor=\"" + anchor + "\">" + s + "</text>\n";
}

std::string Svg::str() const {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width_) + "\" height=\"" +
           num(height_) + "\" viewBox=\"0 0 " + num(width_) + " " + num(height_) + "\">\n" + body_ +
           "</svg>\n";
}

void Svg::save(const std::string& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw format_error("svg: cannot open '" + path + "'");
    out << str();
}

namespace {
const char* kPalette[] = {"#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
constexpr double kW = 640, kH = 400, kMargin = 60;

double map_range(double v, double lo, double hi, double out_lo, double out_hi) {
    if (hi == lo) return (out_lo + out_hi) / 2.0;
    return out_lo + (v - lo) / (hi - lo) * (out_hi - out_lo);
}
}  // namespace

void svg_line_chart(const std::string& path, const std::string& title,
                    const std::vector<double>& xs,
                    const std::vector<std::pair<std::string, std::vector<double>>>& series,
                    bool log_y) {
    Svg svg(kW, kH);
    double lo = 1e300, hi = -1e300;
    auto tr = [log_y](double v) { return log_y ? std::log10(std::max(v, 1e-300)) : v; };
    for (const auto& [name, ys] : series)
        for (double y : ys) {
            if (!std::isfinite(y)) continue;
            lo = std::min(lo, tr(y));
            hi = std::max(hi, tr(y));
        }
    if (lo > hi) {
        lo = 0;
        hi = 1;
    }
    const double x_lo = xs.empty() ? 0 : *std::min_element(xs.begin(), xs.end());
    const double x_hi = xs.empty() ? 1 : *std::max_element(xs.begin(), xs.end());
    svg.line(kMargin, kH - kMargin, kW - 20, kH - kMargin, "#000");
    svg.line(kMargin, kH - kMargin, kMargin, 20, "#000");
    svg.text(kW / 2, 16, title, 14, "middle");
    std::size_t si = 0;
    for (const auto& [name, ys] : series) {
        std::vector<std::pair<double, double>> pts;
        for (std::size_t i = 0; i < xs.size() && i < ys.size(); ++i) {
            if (!std::isfinite(ys[i])) continue;
            pts.emplace_back(map_range(xs[i], x_lo, x_hi, kMargin, kW - 20),
                             map_range(tr(ys[i]), lo, hi, kH - kMargin, 30));
        }
        const std::string color = kPalette[si % 6];
        svg.polyline(pts, color);
        for (const auto& [px, py] : pts) svg.circle(px, py, 2.5, color);
        svg.text(kW - 150, 40 + 16 * static_cast<double>(si), name + (log_y ? " (log)" : ""), 12);
        svg.rect(kW - 165, 32 + 16 * static_cast<double>(si), 10, 10, color);
        ++si;
    }
    svg.text(kMargin - 6, kH - kMargin + 14, fmt_double(x_lo).substr(0, 8), 10, "end");
    svg.text(kW - 20, kH - kMargin + 14, fmt_double(x_hi).substr(0, 8), 10, "end");
    svg.save(path);
}

void svg_range_bars(const std::string& path, const std::string& title,
                    const std::vector<std::string>& labels, const std::vector<double>& lo,
                    const std::vector<double>& hi, bool log_x) {
    Svg svg(kW, kH);
    svg.text(kW / 2, 16, title, 14, "middle");
    auto tr = [log_x](double v) { return log_x ? std::log10(std::max(v, 1e-300)) : v; };
    double vmin = 1e300, vmax = -1e300;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        vmin = std::min(vmin, tr(lo[i]));
        vmax = std::max(vmax, tr(hi[i]));
    }
    if (vmin > vmax) {
        vmin = 0;
        vmax = 1;
    }
    const double row_h = (kH - 2 * kMargin) / std::max<std::size_t>(labels.size(), 1);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double y = kMargin + row_h * static_cast<double>(i) + row_h * 0.25;
        const double x0 = map_range(tr(lo[i]), vmin, vmax, kMargin + 60, kW - 30);
        const double x1 = map_range(tr(hi[i]), vmin, vmax, kMargin + 60, kW - 30);
        svg.rect(x0, y, std::max(x1 - x0, 2.0), row_h * 0.5, kPalette[i % 6]);
        svg.text(kMargin + 52, y + row_h * 0.4, labels[i], 12, "end");
    }
    if (log_x) svg.text(kW / 2, kH - 12, "log10 scale", 10, "middle");
    svg.save(path);
}

void svg_heat_strip(const std::string& path, const std::string& title,
                    const std::vector<std::string>& rows, const std::vector<double>& grid,
                    const std::vector<std::vector<bool>>& converged) {
    Svg svg(kW, kH);
    svg.text(kW / 2, 16, title, 14, "middle");
    const double cell_w = (kW - kMargin - 90) / std::max<std::size_t>(grid.size(), 1);
    const double cell_h = (kH - 2 * kMargin) / std::max<std::size_t>(rows.size(), 1);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        svg.text(kMargin + 72, kMargin + cell_h * (static_cast<double>(r) + 0.6), rows[r], 12, "end");
        for (std::size_t c = 0; c < grid.size(); ++c)
            svg.rect(kMargin + 80 + cell_w * static_cast<double>(c),
                     kMargin + cell_h * static_cast<double>(r) + 2, cell_w - 2, cell_h - 4,
                     converged[r][c] ? "#2ca02c" : "#d62728");
    }
    for (std::size_t c = 0; c < grid.size(); ++c) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "%.2f", grid[c]);
        svg.text(kMargin + 80 + cell_w * (static_cast<double>(c) + 0.5), kH - kMargin + 16, buf, 10,
                 "middle");
    }
    svg.save(path);
}

// ---------------------------------------------------------------- reports

// Wall-clock seconds stay out of the CSV so that a replayed config produces
// byte-identical artifacts; timings live in the JSON report.
std::string epochs_to_csv(const std::vector<EpochRecord>& recs) {
    CsvWriter csv({"epoch", "lr", "train_loss", "train_acc", "test_loss", "test_acc", "diverged"});
    for (const auto& r : recs)
        csv.row({std::to_string(r.epoch), fmt_double(r.lr), fmt_double(r.train_loss),
                 fmt_double(r.train_acc), fmt_double(r.test_loss), fmt_double(r.test_acc),
                 r.diverged ? "1" : "0"});
    return csv.text();
}

std::string run_report_to_json(const RunReport& report) {
    nlohmann::json j;
    j["schema_version"] = report.schema_version;
    j["command"] = report.command;
    j["config"] = report.config_json.empty() ? nlohmann::json::object()
                                             : nlohmann::json::parse(report.config_json);
    nlohmann::json eps = nlohmann::json::array();
    for (const auto& r : report.epochs)
        eps.push_back({{"epoch", r.epoch},
                       {"lr", r.lr},
                       {"train_loss", r.train_loss},
                       {"train_acc", r.train_acc},
                       {"test_loss", r.test_loss},
                       {"test_acc", r.test_acc},
                       {"seconds", r.seconds},
                       {"diverged", r.diverged}});
    j["epochs"] = eps;
    j["diagnostics"] = report.diagnostics_json.empty()
                           ? nlohmann::json::object()
                           : nlohmann::json::parse(report.diagnostics_json);
    nlohmann::json digests = nlohmann::json::object();
    for (const auto& [name, digest] : report.tableau_digests) digests[name] = digest;
    j["tableau_digests"] = digests;
    j["wall_clock_s"] = report.wall_clock_s;
    j["artifacts"] = report.artifacts;
    return j.dump(2);
}

void write_run_report(const std::string& path, const RunReport& report) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw format_error("report: cannot open '" + path + "'");
    out << run_report_to_json(report) << "\n";
}

}  // namespace honet
