#include "fadi/dataset_io.hpp"

#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace fadi {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::array<char, 4> kMagic{'F', 'A', 'D', 'I'};

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

json matrix_to_json(const Matrix& a) {
  json rows = json::array();
  for (Index i = 0; i < a.rows(); ++i) {
    json r = json::array();
    for (Index j = 0; j < a.cols(); ++j) r.push_back(a(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

Matrix matrix_from_json(const json& j) {
  const auto rows = static_cast<Index>(j.size());
  const auto cols = rows == 0 ? Index{0} : static_cast<Index>(j.at(0).size());
  Matrix a(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index c = 0; c < cols; ++c) a(i, c) = j.at(std::size_t(i)).at(std::size_t(c)).get<double>();
  return a;
}

std::uint32_t model_tag(ModelKind kind) { return static_cast<std::uint32_t>(kind); }

ModelKind model_from_tag(std::uint32_t tag) {
  if (tag > 3) throw InvalidArgument("unknown model tag in split file");
  return static_cast<ModelKind>(tag);
}

}  // namespace

void write_binary_matrix(const fs::path& path, const BinaryHeader& h, const Matrix& payload,
                         const std::vector<std::uint8_t>& mask) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InvalidArgument("cannot open " + path.string() + " for writing");
  os.write(kMagic.data(), 4);
  put<std::uint32_t>(os, h.version);
  put<std::uint32_t>(os, h.model_tag);
  put<std::uint32_t>(os, mask.empty() ? 0u : 1u);
  put<std::uint64_t>(os, static_cast<std::uint64_t>(payload.rows()));
  put<std::uint64_t>(os, static_cast<std::uint64_t>(payload.cols()));
  put<std::uint64_t>(os, h.d);
  put<std::uint64_t>(os, h.n);
  put<std::uint64_t>(os, h.index_begin);
  put<std::uint64_t>(os, h.index_end);
  os.write(reinterpret_cast<const char*>(payload.data()),
           static_cast<std::streamsize>(payload.size() * sizeof(double)));
  if (!mask.empty()) {
    os.write(reinterpret_cast<const char*>(mask.data()), static_cast<std::streamsize>(mask.size()));
  }
  if (!os) throw Error("write failed for " + path.string());
}

BinaryMatrix read_binary_matrix(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InvalidArgument("cannot open " + path.string());
  std::array<char, 4> magic{};
  is.read(magic.data(), 4);
  if (magic != kMagic) throw InvalidArgument(path.string() + ": bad magic");
  BinaryMatrix out;
  out.header.version = get<std::uint32_t>(is);
  if (out.header.version != 1) throw InvalidArgument(path.string() + ": unsupported version");
  out.header.model_tag = get<std::uint32_t>(is);
  out.header.flags = get<std::uint32_t>(is);
  out.header.rows = get<std::uint64_t>(is);
  out.header.cols = get<std::uint64_t>(is);
  out.header.d = get<std::uint64_t>(is);
  out.header.n = get<std::uint64_t>(is);
  out.header.index_begin = get<std::uint64_t>(is);
  out.header.index_end = get<std::uint64_t>(is);
  if (!is) throw InvalidArgument(path.string() + ": truncated header");
  out.payload.resize(static_cast<Index>(out.header.rows), static_cast<Index>(out.header.cols));
  is.read(reinterpret_cast<char*>(out.payload.data()),
          static_cast<std::streamsize>(out.payload.size() * sizeof(double)));
  if (out.header.flags & 1u) {
    out.mask.resize(static_cast<std::size_t>(out.payload.size()));
    is.read(reinterpret_cast<char*>(out.mask.data()), static_cast<std::streamsize>(out.mask.size()));
  }
  if (!is) throw InvalidArgument(path.string() + ": truncated payload");
  return out;
}

void save_dataset(const Dataset& ds, const fs::path& dir) {
  fs::create_directories(dir);
  json meta;
  meta["format"] = "fadi-dataset";
  meta["version"] = 1;
  meta["model"] = std::string(model_name(ds.model));
  meta["dims"] = {{"d", ds.dims.d}, {"n", ds.dims.n}, {"m", ds.dims.m}, {"K", ds.dims.K}};
  meta["params"] = ds.params;
  json files = json::array();
  for (std::size_t s = 0; s < ds.splits.size(); ++s) {
    const auto& sp = ds.splits[s];
    std::ostringstream name;
    name << "split_" << std::setw(4) << std::setfill('0') << s << ".bin";
    BinaryHeader h;
    h.model_tag = model_tag(ds.model);
    h.d = ds.dims.d;
    h.n = ds.dims.n;
    h.index_begin = sp.begin();
    h.index_end = sp.begin() + sp.size();
    write_binary_matrix(dir / name.str(), h, sp.data(), sp.mask());
    files.push_back(name.str());
  }
  meta["splits"] = files;
  if (ds.truth) {
    const auto& t = *ds.truth;
    json tj;
    tj["V"] = matrix_to_json(t.V.mat());
    tj["Lambda"] = std::vector<double>(t.Lambda.data(), t.Lambda.data() + t.Lambda.size());
    if (t.labels) tj["labels"] = *t.labels;
    if (t.Pi) tj["Pi"] = matrix_to_json(*t.Pi);
    if (t.sigma2) tj["sigma2"] = *t.sigma2;
    if (t.theta) tj["theta"] = *t.theta;
    meta["truth"] = std::move(tj);
  }
  std::ofstream os(dir / "dataset.json");
  if (!os) throw InvalidArgument("cannot write " + (dir / "dataset.json").string());
  os << meta.dump(1) << '\n';
}

Dataset load_dataset(const fs::path& dir) {
  std::ifstream is(dir / "dataset.json");
  if (!is) throw InvalidArgument("cannot open " + (dir / "dataset.json").string());
  json meta;
  try {
    is >> meta;
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("dataset.json: ") + e.what());
  }
  Dataset ds;
  ds.model = parse_model(meta.at("model").get<std::string>());
  const auto& dims = meta.at("dims");
  ds.dims = Dims{dims.at("d").get<std::size_t>(), dims.at("n").get<std::size_t>(),
                 dims.at("m").get<std::size_t>(), dims.at("K").get<std::size_t>()};
  ds.params = meta.value("params", std::map<std::string, double>{});
  for (const auto& f : meta.at("splits")) {
    BinaryMatrix bm = read_binary_matrix(dir / f.get<std::string>());
    if (model_from_tag(bm.header.model_tag) != ds.model)
      throw InvalidArgument("split file model tag disagrees with dataset.json");
    if (is_sample_split(ds.model)) {
      ds.splits.push_back(SplitOperator::sample_rows(ds.model, std::move(bm.payload),
                                                     bm.header.index_begin, ds.dims.n));
    } else {
      ds.splits.push_back(SplitOperator::column_block(ds.model, std::move(bm.payload),
                                                      bm.header.index_begin, std::move(bm.mask)));
    }
  }
  if (ds.splits.size() != ds.dims.m) throw InvalidArgument("split count disagrees with dims.m");
  if (meta.contains("truth")) {
    const auto& tj = meta["truth"];
    GroundTruth t;
    t.V = OrthonormalBasis(matrix_from_json(tj.at("V")), 1e-6);
    const auto lam = tj.at("Lambda").get<std::vector<double>>();
    t.Lambda = Eigen::Map<const Vector>(lam.data(), Index(lam.size()));
    if (tj.contains("labels")) t.labels = tj["labels"].get<std::vector<int>>();
    if (tj.contains("Pi")) t.Pi = matrix_from_json(tj["Pi"]);
    if (tj.contains("sigma2")) t.sigma2 = tj["sigma2"].get<double>();
    if (tj.contains("theta")) t.theta = tj["theta"].get<double>();
    ds.truth = std::move(t);
  }
  return ds;
}

Dataset import_csv_matrix(const fs::path& path, ModelKind kind, std::size_t m) {
  require(!is_sample_split(kind), "CSV import supports column-split models only");
  std::ifstream is(path);
  if (!is) throw InvalidArgument("cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      const auto b = cell.find_first_not_of(" \t");
      const auto e = cell.find_last_not_of(" \t");
      cell = b == std::string::npos ? std::string() : cell.substr(b, e - b + 1);
      if (cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan") {
        row.push_back(std::numeric_limits<double>::quiet_NaN());
      } else {
        try {
          row.push_back(std::stod(cell));
        } catch (const std::exception&) {
          throw InvalidArgument(path.string() + ": unparseable cell '" + cell + "'");
        }
      }
    }
    if (!line.empty() && line.back() == ',') row.push_back(std::numeric_limits<double>::quiet_NaN());
    rows.push_back(std::move(row));
  }
  const std::size_t d = rows.size();
  require(d >= 1, path.string() + ": empty matrix");
  Matrix x{static_cast<Index>(d), static_cast<Index>(d)};
  std::vector<std::uint8_t> mask;
  bool any_missing = false;
  for (std::size_t i = 0; i < d; ++i) {
    if (rows[i].size() != d) throw InvalidArgument(path.string() + ": matrix is not square");
    for (std::size_t j = 0; j < d; ++j) {
      const double v = rows[i][j];
      if (std::isnan(v)) any_missing = true;
      x(Index(i), Index(j)) = v;
    }
  }
  if (any_missing) {
    if (kind != ModelKind::IncompleteMatrix)
      throw InvalidArgument(path.string() + ": missing entries require the incomplete model");
    mask.assign(d * d, 1);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j)
        if (std::isnan(x(Index(i), Index(j)))) {
          mask[i * d + j] = 0;
          x(Index(i), Index(j)) = 0.0;
        }
  }
  require_finite(x, "CSV matrix");
  if (max_asymmetry(x) > 1e-10 * std::max(1.0, x.cwiseAbs().maxCoeff()))
    throw InvalidArgument(path.string() + ": matrix must be symmetric");
  return dataset_from_square(kind, x, m, mask);
}

void write_csv_matrix(const fs::path& path, const Matrix& a) {
  std::ofstream os(path);
  if (!os) throw InvalidArgument("cannot write " + path.string());
  os << std::setprecision(17);
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      if (j) os << ',';
      os << a(i, j);
    }
    os << '\n';
  }
}

}  // namespace fadi
