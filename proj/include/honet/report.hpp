#pragma once
#include <string>
#include <vector>

#include "honet/train.hpp"

namespace honet {

// ---- CSV ----
class CsvWriter {
  public:
    explicit CsvWriter(std::vector<std::string> columns);
    void row(const std::vector<std::string>& cells);
    void save(const std::string& path) const;
    const std::string& text() const { return text_; }

  private:
    std::size_t columns_;
    std::string text_;
};

std::string fmt_double(double v);  // %.17g, replay-stable

// ---- SVG (hand-rolled primitives, deterministic output) ----
class Svg {
  public:
    Svg(double width, double height);
    void line(double x1, double y1, double x2, double y2, const std::string& stroke,
              double stroke_width = 1.0);
    void rect(double x, double y, double w, double h, const std::string& fill);
    void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& stroke);
    void circle(double cx, double cy, double r, const std::string& fill);
    void text(double x, double y, const std::string& s, int size = 12,
              const std::string& anchor = "start");
    std::string str() const;
    void save(const std::string& path) const;

  private:
    double width_, height_;
    std::string body_;
};

/// Simple line chart: one polyline per series over shared x values.
void svg_line_chart(const std::string& path, const std::string& title,
                    const std::vector<double>& xs,
                    const std::vector<std::pair<std::string, std::vector<double>>>& series,
                    bool log_y = false);

/// Horizontal min-max range bars, one per labelled row.
void svg_range_bars(const std::string& path, const std::string& title,
                    const std::vector<std::string>& labels, const std::vector<double>& lo,
                    const std::vector<double>& hi, bool log_x);

/// Converged/diverged strip per scheme over a learning-rate grid.
void svg_heat_strip(const std::string& path, const std::string& title,
                    const std::vector<std::string>& rows, const std::vector<double>& grid,
                    const std::vector<std::vector<bool>>& converged);

// ---- run reports ----
struct RunReport {
    int schema_version = 1;
    std::string command;
    std::string config_json;  // snapshot
    std::vector<EpochRecord> epochs;
    std::string diagnostics_json;
    std::vector<std::pair<std::string, std::string>> tableau_digests;
    double wall_clock_s = 0.0;
    std::vector<std::string> artifacts;  // files in the output dir
};

std::string epochs_to_csv(const std::vector<EpochRecord>& recs);
void write_run_report(const std::string& path, const RunReport& report);
std::string run_report_to_json(const RunReport& report);

}  // namespace honet
