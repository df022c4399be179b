#include "featmap/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "featmap/errors.hpp"

namespace featmap {

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : path_(path), columns_(header.size()) {
  row(header);
}

void CsvWriter::row(const std::vector<std::string>& fields) {
  if (!open_) throw std::logic_error("csv writer already closed");
  if (fields.size() != columns_) throw std::logic_error("csv row width differs from the header");
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) buffer_ += ',';
    buffer_ += csv_escape(fields[i]);
  }
  buffer_ += "\r\n";
}

void CsvWriter::row(std::span<const double> values) {
  std::vector<std::string> f;
  f.reserve(values.size());
  for (double v : values) f.push_back(format_double(v));
  row(f);
}

void CsvWriter::close() {
  if (!open_) return;
  write_text(path_, buffer_);
  open_ = false;
}

int CsvTable::column(std::string_view name) const {
  auto it = std::find(header.begin(), header.end(), name);
  return it == header.end() ? -1 : static_cast<int>(it - header.begin());
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> rec;
  std::string field;
  bool quoted = false, any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      rec.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\r' || c == '\n') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        rec.push_back(std::move(field));
        records.push_back(std::move(rec));
      }
      field.clear();
      rec.clear();
      any = false;
    } else {
      field += c;
      any = true;
    }
  }
  if (any || !field.empty()) {
    rec.push_back(std::move(field));
    records.push_back(std::move(rec));
  }
  CsvTable t;
  if (records.empty()) return t;
  t.header = std::move(records.front());
  t.rows.assign(std::make_move_iterator(records.begin() + 1), std::make_move_iterator(records.end()));
  return t;
}

void write_pgm(const std::filesystem::path& path, int width, int height, std::span<const double> values) {
  if (width <= 0 || height <= 0 || values.size() != static_cast<std::size_t>(width) * height)
    throw std::logic_error("pgm size mismatch");
  std::string out = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  for (int y = height - 1; y >= 0; --y) {
    for (int x = 0; x < width; ++x) {
      double v = values[static_cast<std::size_t>(y) * width + x];
      if (std::isnan(v)) v = 0.0;
      v = std::clamp(v, 0.0, 1.0);
      out += static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * v)));
    }
  }
  write_text(path, out);
}

void write_density_pgm(const std::filesystem::path& path, const Grid& grid, std::span<const double> rho) {
  write_pgm(path, grid.nx, grid.ny, rho);
}

void write_density_csv(const std::filesystem::path& path, const Grid& grid, std::span<const double> rho) {
  CsvWriter w(path, {"ex", "ey", "rho"});
  for (int e = 0; e < grid.num_elements(); ++e)
    w.row({std::to_string(e % grid.nx), std::to_string(e / grid.nx), format_double(rho[e])});
  w.close();
}

void write_gradient_csv(const std::filesystem::path& path, const GradientReport& report) {
  CsvWriter w(path, {"param", "analytic", "fd", "rel_err"});
  for (const auto& r : report.rows)
    w.row({r.param, format_double(r.analytic), format_double(r.fd), format_double(r.rel_err)});
  w.close();
}

void write_history_csv(const std::filesystem::path& path, const History& history) {
  std::vector<std::string> header = {"iter", "objective", "max_constraint", "grad_norm"};
  std::size_t n = history.records.empty() ? 0 : history.records.front().design.size();
  for (std::size_t i = 0; i < n; ++i) header.push_back("s_" + std::to_string(i + 1));
  CsvWriter w(path, header);
  for (const auto& r : history.records) {
    std::vector<std::string> f = {std::to_string(r.iter), format_double(r.objective), format_double(r.max_constraint),
                                  format_double(r.grad_norm)};
    for (double v : r.design) f.push_back(format_double(v));
    w.row(f);
  }
  w.close();
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace featmap
