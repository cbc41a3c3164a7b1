#include "biflow/map_io.hpp"

#include "biflow/error.hpp"
#include "biflow/io.hpp"
#include "biflow/monotone_map.hpp"

namespace biflow {

using nlohmann::json;

namespace {

json split_json(BlockSplit s) { return json::array({s.n, s.m}); }

BlockSplit split_from(const json& j) {
  require(j.is_array() && j.size() == 2, ErrorCode::BadModel, "block_split must be [n, m]");
  return {j[0].get<std::size_t>(), j[1].get<std::size_t>()};
}

json component_json(const MonotoneComponent& c) {
  return {{"input_dim", c.input_dim()},
          {"max_total_order", c.max_total_order()},
          {"multi_indices", c.basis().to_vectors()},
          {"coeffs_nonmonotone", c.coeffs_nonmonotone()},
          {"coeffs_monotone", c.coeffs_monotone()},
          {"quadrature_nodes", c.quadrature_nodes()}};
}

MonotoneComponent component_from(const json& j) {
  const auto k = j.at("input_dim").get<std::size_t>();
  const auto order = j.at("max_total_order").get<std::size_t>();
  auto indices = j.at("multi_indices").get<std::vector<std::vector<std::uint32_t>>>();
  return MonotoneComponent(MultiIndexSet(k, order, indices), j.at("coeffs_nonmonotone").get<Vector>(),
                           j.at("coeffs_monotone").get<Vector>(), j.at("quadrature_nodes").get<std::size_t>());
}

std::shared_ptr<TriangularMap> parse(const json& doc) {
  const std::string type = doc.at("type").get<std::string>();
  if (type == "sign_target") return std::make_shared<SignTargetMap>(doc.at("a").get<double>(), doc.at("b").get<double>());

  const BlockSplit split = split_from(doc.at("block_split"));
  require(doc.at("dimension").get<std::size_t>() == split.total(), ErrorCode::BadModel,
          "dimension does not match block_split");
  const Orientation orient = orientation_from_string(doc.at("orientation").get<std::string>());
  if (type == "affine") {
    const auto rows = doc.at("matrix").get<std::vector<Vector>>();
    Matrix a(rows.size(), rows.empty() ? 0 : rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      require(rows[i].size() == a.cols(), ErrorCode::BadModel, "ragged matrix");
      for (std::size_t j = 0; j < a.cols(); ++j) a(i, j) = rows[i][j];
    }
    return std::make_shared<AffineTriangularMap>(std::move(a), doc.at("shift").get<Vector>(), orient, split);
  }
  if (type == "monotone") {
    const std::string p = doc.at("parametrization").get<std::string>();
    require(p == "forward" || p == "inverse", ErrorCode::BadModel, "unknown parametrization");
    std::vector<MonotoneComponent> comps;
    for (const auto& c : doc.at("components")) comps.push_back(component_from(c));
    auto map = std::make_shared<MonotoneTriangularMap>(
        split, orient, p == "forward" ? Parametrization::Forward : Parametrization::Inverse, std::move(comps));
    map->set_standardization(doc.at("data_shift").get<Vector>(), doc.at("data_scale").get<Vector>());
    return map;
  }
  fail(ErrorCode::BadModel, "unknown map type '" + type + "'");
}

}  // namespace

std::string to_string(Orientation o) { return o == Orientation::Lower ? "lower" : "upper"; }

Orientation orientation_from_string(const std::string& s) {
  if (s == "lower") return Orientation::Lower;
  if (s == "upper") return Orientation::Upper;
  fail(ErrorCode::BadModel, "unknown orientation '" + s + "'");
}

json map_to_json(const TriangularMap& map) {
  if (const auto* t = dynamic_cast<const SignTargetMap*>(&map))
    return {{"type", "sign_target"}, {"dimension", 2}, {"orientation", "lower"},
            {"block_split", split_json(t->split())}, {"a", t->a()}, {"b", t->b()}};

  json doc = {{"dimension", map.dimension()},
              {"orientation", to_string(map.orientation())},
              {"block_split", split_json(map.split())}};
  if (const auto* a = dynamic_cast<const AffineTriangularMap*>(&map)) {
    std::vector<Vector> rows;
    for (std::size_t i = 0; i < a->matrix().rows(); ++i) {
      const auto r = a->matrix().row(i);
      rows.emplace_back(r.begin(), r.end());
    }
    doc["type"] = "affine";
    doc["matrix"] = rows;
    doc["shift"] = a->shift();
    return doc;
  }
  if (const auto* m = dynamic_cast<const MonotoneTriangularMap*>(&map)) {
    doc["type"] = "monotone";
    doc["parametrization"] = m->parametrization() == Parametrization::Forward ? "forward" : "inverse";
    doc["data_shift"] = m->data_shift();
    doc["data_scale"] = m->data_scale();
    json comps = json::array();
    for (const auto& c : m->components()) comps.push_back(component_json(c));
    doc["components"] = std::move(comps);
    return doc;
  }
  fail(ErrorCode::BadModel, "map type has no JSON form");
}

std::shared_ptr<TriangularMap> map_from_json(const json& doc) {
  try {
    return parse(doc);
  } catch (const json::exception& e) {
    fail(ErrorCode::BadModel, std::string("malformed map document: ") + e.what());
  }
}

void save_map(const std::string& path, const TriangularMap& map) {
  write_text(path, map_to_json(map).dump(1) + "\n");
}

std::shared_ptr<TriangularMap> load_map(const std::string& path) {
  json doc;
  try {
    doc = json::parse(read_text(path));
  } catch (const json::exception& e) {
    fail(ErrorCode::BadModel, std::string("map file is not valid JSON: ") + e.what());
  }
  return map_from_json(doc);
}

}  // namespace biflow
