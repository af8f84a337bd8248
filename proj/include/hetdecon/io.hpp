#pragma once

#include "error_models.hpp"
#include "estimator.hpp"
#include "risk.hpp"
#include "simulation.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace hetdecon::io {

//! Malformed input file or value; carries a single-line diagnostic.
class parse_error : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

//! Shortest-safe round-trip formatting (17 significant digits).
inline std::string format_double(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(std::string_view s, const std::string& where)
{
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  if (!s.empty() && s.front() == '+')
    s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw parse_error(where + ": cannot parse number '" + std::string(s) + "'");
  if (!std::isfinite(v))
    throw parse_error(where + ": non-finite value");
  return v;
}

inline unsigned parse_unsigned(std::string_view s, const std::string& where)
{
  unsigned v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw parse_error(where + ": cannot parse count '" + std::string(s) + "'");
  return v;
}

namespace detail {

inline std::vector<std::string> split(std::string_view line, char sep)
{
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    std::size_t pos = line.find(sep, start);
    std::string_view field = line.substr(start, pos == std::string_view::npos ? pos : pos - start);
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t'))
      field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r'))
      field.remove_suffix(1);
    out.emplace_back(field);
    if (pos == std::string_view::npos)
      return out;
    start = pos + 1;
  }
}

inline std::vector<std::string> words(const std::string& line)
{
  std::istringstream is(line);
  std::vector<std::string> out;
  for (std::string w; is >> w;)
    out.push_back(w);
  return out;
}

inline std::ifstream open_input(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw parse_error("cannot open '" + path + "'");
  return in;
}

//! Reads a headed CSV; returns data rows split on commas.
inline std::vector<std::vector<std::string>> read_csv(const std::string& path,
                                                      const std::vector<std::string>& header)
{
  auto in = open_input(path);
  std::string line;
  if (!std::getline(in, line))
    throw parse_error(path + ": empty file");
  if (split(line, ',') != header) {
    std::string expected;
    for (const auto& h : header)
      expected += (expected.empty() ? "" : ",") + h;
    throw parse_error(path + ":1: expected header '" + expected + "'");
  }
  std::vector<std::vector<std::string>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r")
      continue;
    auto fields = split(line, ',');
    if (fields.size() != header.size())
      throw parse_error(path + ":" + std::to_string(lineno) + ": expected " +
                        std::to_string(header.size()) + " fields");
    rows.push_back(std::move(fields));
  }
  return rows;
}

} // namespace detail

//! Writes `content` to a sibling temporary file and renames it over `path`,
//! so a failed run never leaves a partial output.
inline void write_atomic(const std::string& path, const std::string& content)
{
  namespace fs = std::filesystem;
  fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out)
      throw std::runtime_error("write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw std::runtime_error("cannot rename output to '" + path + "'");
  }
}

// ---------------------------------------------------------------- models --

//! Named error models from the config grammar
//!   model <id> degenerate
//!   model <id> normal <mu> <var>
//!   model <id> laplace <scale>
//!   model <id> stable <sigma> <gamma>
//!   model <id> averaged <base-id> <r>
//! Blank lines and `#` comments are ignored. Ids are unique; `averaged`
//! refers to an id defined earlier.
struct ModelConfig
{
  std::vector<std::string> ids;
  std::vector<ErrorModel> models;

  std::size_t index_of(const std::string& id) const
  {
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (ids[i] == id)
        return i;
    }
    throw parse_error("unknown model id '" + id + "'");
  }
};

inline ModelConfig parse_model_config(std::istream& in, const std::string& source = "models")
{
  ModelConfig cfg;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    auto w = detail::words(line);
    if (w.empty())
      continue;
    std::string where = source + ":" + std::to_string(lineno);
    if (w[0] != "model" || w.size() < 3)
      throw parse_error(where + ": expected 'model <id> <family> ...'");
    const std::string& id = w[1];
    for (const auto& seen : cfg.ids) {
      if (seen == id)
        throw parse_error(where + ": duplicate model id '" + id + "'");
    }
    const std::string& family = w[2];
    auto want = [&](std::size_t params) {
      if (w.size() != 3 + params)
        throw parse_error(where + ": '" + family + "' takes " + std::to_string(params) +
                          " parameter(s)");
    };
    try {
      ErrorModel m;
      if (family == "degenerate") {
        want(0);
        m = ErrorModel::degenerate();
      } else if (family == "normal") {
        want(2);
        m = ErrorModel::normal(parse_double(w[3], where), parse_double(w[4], where));
      } else if (family == "laplace") {
        want(1);
        m = ErrorModel::laplace(parse_double(w[3], where));
      } else if (family == "stable") {
        want(2);
        m = ErrorModel::stable(parse_double(w[3], where), parse_double(w[4], where));
      } else if (family == "averaged") {
        want(2);
        m = ErrorModel::averaged(cfg.models[cfg.index_of(w[3])], parse_unsigned(w[4], where));
      } else {
        throw parse_error(where + ": unknown model family '" + family + "'");
      }
      cfg.ids.push_back(id);
      cfg.models.push_back(std::move(m));
    } catch (const parse_error& e) {
      std::string msg = e.what();
      throw parse_error(msg.rfind(source, 0) == 0 ? msg : where + ": " + msg);
    } catch (const std::invalid_argument& e) {
      throw parse_error(where + ": " + e.what());
    }
  }
  if (cfg.models.empty())
    throw parse_error(source + ": no models defined");
  return cfg;
}

inline ModelConfig read_model_config(const std::string& path)
{
  auto in = detail::open_input(path);
  return parse_model_config(in, path);
}

// ---------------------------------------------------------- observations --

//! Observations CSV with header `y,model_id`.
inline HetSample read_observations(const std::string& path, const ModelConfig& cfg)
{
  auto rows = detail::read_csv(path, { "y", "model_id" });
  if (rows.empty())
    throw parse_error(path + ": no observations");
  std::vector<double> ys;
  std::vector<std::size_t> index;
  ys.reserve(rows.size());
  index.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::string where = path + ":" + std::to_string(r + 2);
    ys.push_back(parse_double(rows[r][0], where));
    try {
      index.push_back(cfg.index_of(rows[r][1]));
    } catch (const parse_error& e) {
      throw parse_error(where + ": " + e.what());
    }
  }
  return HetSample(std::move(ys), std::move(index), cfg.models);
}

//! Replicates CSV with header `subject,y`; rows of one subject need not be
//! contiguous. Subjects keep their order of first appearance.
inline ReplicatedSample read_replicates(const std::string& path)
{
  auto rows = detail::read_csv(path, { "subject", "y" });
  if (rows.empty())
    throw parse_error(path + ": no measurements");
  std::vector<ReplicatedSample::Subject> subjects;
  std::map<std::string, std::size_t> where_of;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    double y = parse_double(rows[r][1], path + ":" + std::to_string(r + 2));
    auto [it, inserted] = where_of.try_emplace(rows[r][0], subjects.size());
    if (inserted)
      subjects.push_back({ rows[r][0], {} });
    subjects[it->second].values.push_back(y);
  }
  return ReplicatedSample(std::move(subjects));
}

// --------------------------------------------------------------- outputs --

inline std::string estimate_csv(const std::vector<double>& x, const std::vector<double>& f)
{
  if (x.size() != f.size())
    throw std::invalid_argument("grid and values differ in length");
  std::string out = "x,f\n";
  for (std::size_t k = 0; k < x.size(); ++k)
    out += format_double(x[k]) + "," + format_double(f[k]) + "\n";
  return out;
}

inline std::string estimate_csv(const DensityEstimate& est)
{
  return estimate_csv(est.x, est.values);
}

//! Reads an `x,f` file written by estimate_csv.
inline std::pair<std::vector<double>, std::vector<double>> read_estimate(const std::string& path)
{
  auto rows = detail::read_csv(path, { "x", "f" });
  std::vector<double> x;
  std::vector<double> f;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::string where = path + ":" + std::to_string(r + 2);
    x.push_back(parse_double(rows[r][0], where));
    f.push_back(parse_double(rows[r][1], where));
  }
  return { std::move(x), std::move(f) };
}

inline std::string risk_csv(const std::vector<RiskReport>& rows)
{
  std::string out = "h,bias_term,variance_term,rn_term,mise\n";
  for (const auto& r : rows) {
    out += format_double(r.h) + "," + format_double(r.bias_term) + "," +
           format_double(r.variance_term) + "," + format_double(r.rn_term) + "," +
           format_double(r.mise) + "\n";
  }
  return out;
}

inline std::string bands_csv(const QuantileBands& b)
{
  std::string out = "x,true_f,q10,q25,q50,q75,q90\n";
  for (std::size_t k = 0; k < b.x.size(); ++k) {
    out += format_double(b.x[k]) + "," + format_double(b.truth[k]);
    for (const auto& q : b.q)
      out += "," + format_double(q[k]);
    out += "\n";
  }
  return out;
}

//! Per-replication summary: replication,h,ise,ise_grid,status.
inline std::string summary_csv(const ExperimentResult& res)
{
  std::string out = "replication,h,ise,ise_grid,status\n";
  for (std::size_t i = 0; i < res.replications.size(); ++i) {
    const auto& r = res.replications[i];
    out += std::to_string(i) + ",";
    if (r.failed) {
      out += ",,,failed\n";
    } else {
      out += format_double(r.h) + "," + format_double(r.ise) + "," + format_double(r.ise_grid) +
             ",ok\n";
    }
  }
  return out;
}

//! Sidecar path `<out>.meta.json`.
inline std::string metadata_path(const std::string& out) { return out + ".meta.json"; }

} // namespace hetdecon::io
