#include "ldpe/io.hpp"

#include "ldpe/numerics.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

namespace ldpe {

std::string format_double(double value) {
  char buf[40];
  const auto result = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, result.ptr);
}

namespace {

double parse_field(const std::string& field, std::size_t row, std::size_t col) {
  const char* begin = field.data();
  const char* end = begin + field.size();
  while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
  while (end > begin && (*(end - 1) == ' ' || *(end - 1) == '\t' || *(end - 1) == '\r')) --end;
  double value = 0.0;
  const auto result = std::from_chars(begin, end, value);
  if (result.ec != std::errc{} || result.ptr != end)
    throw IoError("malformed number at row " + std::to_string(row + 1) + ", column " +
                  std::to_string(col + 1));
  return value;
}

std::vector<std::vector<double>> read_rows(const std::string& path, bool skip_header) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  if (skip_header && std::getline(is, line)) ++line_no;
  while (std::getline(is, line)) {
    if (line.empty() || (line.size() == 1 && line[0] == '\r')) {
      ++line_no;
      continue;
    }
    std::vector<double> row;
    std::size_t start = 0;
    std::size_t col = 0;
    for (;;) {
      const std::size_t comma = line.find(',', start);
      const std::string field = line.substr(start, comma == std::string::npos
                                                       ? std::string::npos
                                                       : comma - start);
      row.push_back(parse_field(field, line_no, col));
      ++col;
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw IoError("ragged row " + std::to_string(line_no + 1) + " in " + path);
    rows.push_back(std::move(row));
    ++line_no;
  }
  if (rows.empty()) throw IoError("no data rows in " + path);
  return rows;
}

}  // namespace

Matrix read_csv_matrix(const std::string& path, bool skip_header) {
  const auto rows = read_rows(path, skip_header);
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  return m;
}

Vector read_csv_vector(const std::string& path, bool skip_header) {
  const auto rows = read_rows(path, skip_header);
  Vector v(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != 1)
      throw IoError("expected a single column in " + path + ", row " + std::to_string(i + 1));
    v[static_cast<Index>(i)] = rows[i][0];
  }
  return v;
}

void atomic_write(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.parent_path() / (target.filename().string() + ".tmp");
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + tmp.string() + " for writing");
    os.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!os) throw IoError("write failure on " + tmp.string());
  }
  fs::rename(tmp, target);
}

namespace {

nlohmann::json number_or_null(double value) {
  if (std::isnan(value)) return nullptr;
  return value;
}

char hex_digit(std::uint64_t v) { return "0123456789abcdef"[v & 0xF]; }

std::string hash_hex(std::uint64_t h) {
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = hex_digit(h);
    h >>= 4;
  }
  return s;
}

}  // namespace

namespace {

// Coefficients are reported on the caller's original column scale; tau is
// rescaled the same way so half_width = Φ⁻¹(1−α/2)·σ̂·tau stays true row by
// row. For an already-standardized design all scales are 1.
double scale_of(const LdpeFit& fit, Index j) {
  return fit.original_scales.size() == fit.p() ? fit.original_scales[j] : 1.0;
}

}  // namespace

std::string fit_to_json(const LdpeFit& fit, double alpha, std::optional<std::uint64_t> seed) {
  const double q = normal_quantile(1.0 - alpha / 2.0);
  nlohmann::json doc;
  doc["n"] = fit.n;
  doc["p"] = fit.p();
  doc["lambda0"] = fit.lambda0;
  doc["sigma_hat"] = fit.sigma_hat;
  doc["method"] =
      fit.init_method == InitMethod::scaled_lasso ? "scaled_lasso" : "scaled_lasso_lse";
  doc["design_hash"] = hash_hex(fit.design_hash);
  if (seed) doc["seed"] = *seed;
  auto& coefs = doc["per_coefficient"] = nlohmann::json::array();
  for (Index j = 0; j < fit.p(); ++j) {
    const double scale = scale_of(fit, j);
    nlohmann::json row;
    row["j"] = j + 1;  // 1-based in all user-facing output
    row["beta_init"] = fit.beta_init[j] / scale;
    row["beta_hat"] = fit.beta_hat[j] / scale;
    row["tau"] = number_or_null(fit.tau[j] / scale);
    row["eta"] = number_or_null(fit.eta[j]);
    if (fit.has_score[static_cast<std::size_t>(j)]) {
      const double half = q * fit.sigma_hat * fit.tau[j] / scale;
      row["ci_low"] = fit.beta_hat[j] / scale - half;
      row["ci_high"] = fit.beta_hat[j] / scale + half;
    } else {
      row["ci_low"] = nullptr;
      row["ci_high"] = nullptr;
    }
    coefs.push_back(std::move(row));
  }
  return doc.dump(2) + "\n";
}

std::string fit_to_csv(const LdpeFit& fit, double alpha) {
  const double q = normal_quantile(1.0 - alpha / 2.0);
  std::ostringstream os;
  os << "j,beta_init,beta_hat,tau,eta,ci_low,ci_high\n";
  for (Index j = 0; j < fit.p(); ++j) {
    const double scale = scale_of(fit, j);
    os << (j + 1) << ',' << format_double(fit.beta_init[j] / scale) << ','
       << format_double(fit.beta_hat[j] / scale) << ',';
    if (fit.has_score[static_cast<std::size_t>(j)]) {
      const double half = q * fit.sigma_hat * fit.tau[j] / scale;
      os << format_double(fit.tau[j] / scale) << ',' << format_double(fit.eta[j]) << ','
         << format_double(fit.beta_hat[j] / scale - half) << ','
         << format_double(fit.beta_hat[j] / scale + half);
    } else {
      os << ",,,";
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace ldpe
