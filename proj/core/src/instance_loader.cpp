#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "regmod/errors.hpp"
#include "regmod/function_model.hpp"

namespace regmod {

namespace {

using nlohmann::json;

const std::set<std::string, std::less<>> kKnownKeys = {
    "family", "name", "description", "p",      "kappa0", "M",           "A",        "b",
    "lambda", "m",    "box_radius",  "knots", "pieces", "base_points", "premises", "rho",
};

double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(path, "expected a finite number");
  return v;
}

std::size_t positive_int(const json& j, const std::string& path) {
  if (!j.is_number_integer() || j.get<long long>() < 1) {
    throw ConfigError(path, "expected a positive integer");
  }
  return static_cast<std::size_t>(j.get<long long>());
}

Vector vector_of(const json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path, "expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = number(j[i], path + "[" + std::to_string(i) + "]");
  }
  return v;
}

Matrix matrix_of(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ConfigError(path, "expected a nonempty array of rows");
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  if (cols == 0) throw ConfigError(path + "[0]", "expected a nonempty row");
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    const std::string rp = path + "[" + std::to_string(r) + "]";
    if (!j[r].is_array() || j[r].size() != cols) {
      throw ConfigError(rp, "expected " + std::to_string(cols) + " entries");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          number(j[r][c], rp + "[" + std::to_string(c) + "]");
    }
  }
  return m;
}

const json& require(const json& root, const std::string& key) {
  if (!root.contains(key)) throw ConfigError(key, "required field is missing");
  return root.at(key);
}

void expect_square(const Matrix& m, std::size_t p, const std::string& path) {
  if (static_cast<std::size_t>(m.rows()) != p || static_cast<std::size_t>(m.cols()) != p) {
    throw ConfigError(path, "expected a " + std::to_string(p) + "x" + std::to_string(p) +
                                " matrix");
  }
}

std::size_t level_within(const json& root, std::size_t length) {
  const std::size_t level = positive_int(require(root, "kappa0"), "kappa0");
  if (level > length) {
    throw ConfigError("kappa0", "must not exceed " + std::to_string(length));
  }
  if (length > 24) throw ConfigError("p", "sparsity families are limited to 24 coordinates");
  return level;
}

FunctionInstance build(const json& root, const std::string& name) {
  const json& fam = require(root, "family");
  if (!fam.is_string()) throw ConfigError("family", "expected a string");
  const auto family = parse_family(fam.get<std::string>());
  if (!family) throw ConfigError("family", "unknown family '" + fam.get<std::string>() + "'");

  auto dim = [&]() { return positive_int(require(root, "p"), "p"); };
  auto lambda = [&]() {
    const double l = number(require(root, "lambda"), "lambda");
    if (l < 0.0) throw ConfigError("lambda", "must be nonnegative");
    return l;
  };
  auto ls_pair = [&](std::size_t p) {
    Matrix a = matrix_of(require(root, "A"), "A");
    if (static_cast<std::size_t>(a.cols()) != p) {
      throw ConfigError("A", "expected " + std::to_string(p) + " columns");
    }
    Vector b = vector_of(require(root, "b"), "b");
    if (b.size() != a.rows()) throw ConfigError("b", "length must equal the rows of A");
    return std::pair{a, b};
  };

  switch (*family) {
    case Family::zero_norm_quadratic:
    case Family::zero_norm_quadratic_nonneg: {
      const std::size_t p = dim();
      const std::size_t level = level_within(root, p);
      const auto n = static_cast<Eigen::Index>(p);
      Matrix m = Matrix::Zero(n, n);
      if (root.contains("M")) {
        m = matrix_of(root.at("M"), "M");
        expect_square(m, p, "M");
      }
      return make_zero_norm_quadratic(name, m, level,
                                      *family == Family::zero_norm_quadratic_nonneg);
    }
    case Family::bilinear_sparse: {
      Matrix a = matrix_of(require(root, "A"), "A");
      if (a.rows() != a.cols()) throw ConfigError("A", "expected a square matrix");
      const std::size_t cols = positive_int(require(root, "m"), "m");
      const std::size_t block = static_cast<std::size_t>(a.rows()) * cols;
      if (root.contains("p") && dim() != 2 * block) {
        throw ConfigError("p", "must equal 2*n*m = " + std::to_string(2 * block));
      }
      return make_bilinear(name, a, cols, level_within(root, block));
    }
    case Family::quadratic: {
      const std::size_t p = dim();
      Matrix m = matrix_of(require(root, "M"), "M");
      expect_square(m, p, "M");
      return make_quadratic(name, m);
    }
    case Family::least_squares: {
      auto [a, b] = ls_pair(dim());
      return make_least_squares(name, a, b);
    }
    case Family::l1:
      return make_l1(name, dim(), lambda());
    case Family::l1_least_squares: {
      auto [a, b] = ls_pair(dim());
      return make_l1_least_squares(name, a, b, lambda());
    }
    case Family::plq_separable: {
      const std::size_t p = dim();
      std::vector<double> knots;
      const json& jk = require(root, "knots");
      if (!jk.is_array()) throw ConfigError("knots", "expected an array");
      for (std::size_t i = 0; i < jk.size(); ++i) {
        knots.push_back(number(jk[i], "knots[" + std::to_string(i) + "]"));
      }
      std::vector<PlqTable::Piece> pieces;
      const json& jp = require(root, "pieces");
      if (!jp.is_array()) throw ConfigError("pieces", "expected an array");
      for (std::size_t j = 0; j < jp.size(); ++j) {
        const std::string path = "pieces[" + std::to_string(j) + "]";
        const Vector abc = vector_of(jp[j], path);
        if (abc.size() != 3) throw ConfigError(path, "expected [a, b, c]");
        pieces.push_back({abc(0), abc(1), abc(2)});
      }
      return make_plq(name, p, PlqTable(std::move(knots), std::move(pieces)));
    }
    case Family::quartic_gap: {
      if (root.contains("p") && dim() != 1) throw ConfigError("p", "quartic-gap is scalar");
      FunctionInstance f = make_quartic_gap();
      f.name = name;
      return f;
    }
  }
  throw ConfigError("family", "unhandled family");
}

}  // namespace

FunctionInstance load_instance(std::string_view json_text, std::string default_name) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError("$", std::string("malformed JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("$", "expected a JSON object");
  for (const auto& [key, _] : root.items()) {
    if (!kKnownKeys.contains(key)) throw ConfigError(key, "unknown field");
  }

  std::string name = std::move(default_name);
  if (root.contains("name")) {
    if (!root["name"].is_string()) throw ConfigError("name", "expected a string");
    name = root["name"].get<std::string>();
  }
  if (name.empty() && root.contains("family") && root["family"].is_string()) {
    name = root["family"].get<std::string>();
  }

  FunctionInstance f;
  try {
    f = build(root, name);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError("$", e.what());
  }

  if (root.contains("box_radius")) {
    f.box_radius = number(root["box_radius"], "box_radius");
    if (f.box_radius <= 0.0) throw ConfigError("box_radius", "must be positive");
  }
  if (root.contains("rho")) {
    const double rho = number(root["rho"], "rho");
    if (rho < 0.0) throw ConfigError("rho", "must be nonnegative");
    f.rho = rho;
  }
  if (root.contains("premises")) {
    const json& pr = root["premises"];
    if (!pr.is_object()) throw ConfigError("premises", "expected an object");
    for (const auto& [key, value] : pr.items()) {
      const std::string path = "premises." + key;
      if (!value.is_boolean()) throw ConfigError(path, "expected a boolean");
      if (key == "continuous_on_crit") {
        f.premises.continuous_on_crit = value.get<bool>();
      } else if (key == "crit_level_bounded") {
        f.premises.crit_level_bounded = value.get<bool>();
      } else if (key == "local_min") {
        f.premises.local_min = value.get<bool>();
      } else {
        throw ConfigError(path, "unknown premise");
      }
    }
  }
  if (root.contains("base_points")) {
    const json& bp = root["base_points"];
    if (!bp.is_array()) throw ConfigError("base_points", "expected an array of points");
    for (std::size_t i = 0; i < bp.size(); ++i) {
      const std::string path = "base_points[" + std::to_string(i) + "]";
      Vector x = vector_of(bp[i], path);
      if (static_cast<std::size_t>(x.size()) != f.dimension) {
        throw ConfigError(path, "expected " + std::to_string(f.dimension) + " coordinates");
      }
      if (!evaluate(f, x).is_finite()) throw ConfigError(path, "point lies outside dom f");
      f.base_points.push_back(std::move(x));
    }
  }
  return f;
}

FunctionInstance load_instance_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), "cannot open instance file");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return load_instance(buffer.str(), path.stem().string());
}

}  // namespace regmod
