#include "uqsub/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

#include "uqsub/error.hpp"

namespace uqsub {

namespace fs = std::filesystem;

namespace {

constexpr const char* kExpansionFormat = "uqsub-expansion";
constexpr int kExpansionVersion = 1;

}  // namespace

void write_atomic(const fs::path& path,
                  const std::function<void(std::ostream&)>& body) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    body(out);
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      fs::remove(tmp, ec);
      throw IoError("write failed: " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot rename onto " + path.string());
  }
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string format_double(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

nlohmann::json expansion_to_json(const Expansion& e) {
  const BasisFamily& b = e.basis();
  const ThetaMeasure& m = b.measure();
  nlohmann::json j;
  j["format"] = kExpansionFormat;
  j["version"] = kExpansionVersion;
  j["basis"] = to_string(b.kind());
  j["measure"] = {{"kind", "uniform"},
                  {"lower", m.lower()},
                  {"upper", m.upper()},
                  {"nodes", m.quadrature_nodes()}};
  const auto bp = b.partition().breakpoints();
  j["breakpoints"] = std::vector<double>(bp.begin(), bp.end());
  nlohmann::json rows = nlohmann::json::array();
  const Eigen::MatrixXd& u = e.coefficients();
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(u.cols()));
    for (Eigen::Index k = 0; k < u.cols(); ++k)
      row[static_cast<std::size_t>(k)] = u(i, k);
    rows.push_back(row);
  }
  j["coefficients"] = std::move(rows);
  return j;
}

Expansion expansion_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != kExpansionFormat)
      throw ConfigError("format", "not an expansion file");
    if (j.at("version").get<int>() != kExpansionVersion)
      throw ConfigError("version", "unsupported expansion version");
    const auto& jm = j.at("measure");
    if (jm.at("kind").get<std::string>() != "uniform")
      throw ConfigError("measure.kind", "only uniform is supported");
    const ThetaMeasure measure(jm.at("lower").get<double>(),
                               jm.at("upper").get<double>(),
                               jm.at("nodes").get<int>());
    BasisFamily basis = BasisFamily::legendre(measure);
    if (basis_kind_from_string(j.at("basis").get<std::string>()) ==
        BasisKind::piecewise_constant)
      basis = BasisFamily::piecewise(
          measure,
          Partition(j.at("breakpoints").get<std::vector<double>>(), measure));
    const auto rows =
        j.at("coefficients").get<std::vector<std::vector<double>>>();
    if (rows.empty()) throw ConfigError("coefficients", "no rows");
    Eigen::MatrixXd u(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != rows.front().size())
        throw ConfigError("coefficients", "ragged rows");
      for (std::size_t k = 0; k < rows[i].size(); ++k)
        u(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
            rows[i][k];
    }
    return Expansion(std::move(basis), std::move(u));
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError("expansion", ex.what());
  }
}

void save_expansion(const Expansion& e, const fs::path& path) {
  const std::string text = expansion_to_json(e).dump(1) + "\n";
  write_atomic(path, [&](std::ostream& out) { out << text; });
}

Expansion load_expansion(const fs::path& path) {
  const std::string text = read_text(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& ex) {
    throw ConfigError(path.filename().string(), ex.what());
  }
  return expansion_from_json(j);
}

}  // namespace uqsub
