#include "bicnet/draw_store.hpp"

#include "bicnet/ingest.hpp"

#include <json.hpp>

#include <bit>
#include <cstring>
#include <fstream>
#include <numeric>

namespace bicnet::store {

namespace fs = std::filesystem;

namespace {

constexpr const char* kSeries[] = {"lambda", "z", "pi0", "mu", "phi", "delta2", "sigma2", "loglik"};

std::size_t product(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

void write_values(std::ofstream& out, std::span<const double> values) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)));
  } else {
    for (double v : values) {
      auto bits = std::bit_cast<std::uint64_t>(v);
      char bytes[8];
      for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
      out.write(bytes, 8);
    }
  }
}

std::vector<double> read_values(std::ifstream& in, std::size_t count, const fs::path& path) {
  std::vector<double> values(count);
  std::vector<unsigned char> bytes(count * 8);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (static_cast<std::size_t>(in.gcount()) != bytes.size()) throw ValidationError("truncated draw file: " + path.string());
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[i * 8 + b]) << (8 * b);
    values[i] = std::bit_cast<double>(bits);
  }
  return values;
}

nlohmann::ordered_json read_header(std::ifstream& in, const fs::path& path) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("empty draw file: " + path.string());
  try {
    return nlohmann::ordered_json::parse(line);
  } catch (const nlohmann::json::exception&) {
    throw ValidationError("malformed draw file header: " + path.string());
  }
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  return out;
}

Matrix from_row_major(std::span<const double> v, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = v[i * cols + j];
  return m;
}

void append_row_major(std::vector<double>& out, const Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out.push_back(m(i, j));
}

}  // namespace

void write_series(const fs::path& path, const DrawSeries& series, const StoragePolicy& policy) {
  nlohmann::ordered_json header;
  header["name"] = series.name();
  header["shape"] = series.shape();
  header["draws"] = series.size();
  header["dtype"] = "float64-le";
  header["order"] = "row-major";
  header["total"] = policy.total;
  header["burn_in"] = policy.burn_in;
  header["thin"] = policy.thin;
  auto out = open_out(path);
  out << header.dump() << '\n';
  write_values(out, series.values());
  if (!out) throw ValidationError("write failed: " + path.string());
}

DrawSeries read_series(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("missing draw file: " + path.string());
  const auto header = read_header(in, path);
  const auto shape = header.at("shape").get<std::vector<std::size_t>>();
  const auto draws = header.at("draws").get<std::size_t>();
  const long burn_in = header.value("burn_in", 0L), thin = header.value("thin", 1L);
  DrawSeries series(header.at("name").get<std::string>(), shape);
  const std::size_t size = product(shape);
  const std::vector<double> values = read_values(in, draws * size, path);
  series.reserve(draws);
  for (std::size_t i = 0; i < draws; ++i)
    series.push(std::span<const double>(values.data() + i * size, size), burn_in + thin * static_cast<long>(i + 1));
  return series;
}

void write_series_csv(const fs::path& path, const DrawSeries& series) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  const auto& shape = series.shape();
  out << "sweep";
  std::vector<std::size_t> idx(shape.size(), 0);
  for (std::size_t e = 0; e < series.draw_size(); ++e) {
    out << ',' << series.name();
    for (std::size_t i : idx) out << '[' << i << ']';
    for (std::size_t d = shape.size(); d-- > 0;) {
      if (++idx[d] < shape[d]) break;
      idx[d] = 0;
    }
  }
  out << '\n';
  for (std::size_t i = 0; i < series.size(); ++i) {
    out << series.sweep_of(i);
    for (double v : series.draw(i)) out << ',' << ingest::format_double(v);
    out << '\n';
  }
}

void write_array(const fs::path& path, const std::string& name, const std::vector<std::size_t>& shape,
                 std::span<const double> values) {
  if (values.size() != product(shape)) throw ValidationError("array size does not match its shape");
  nlohmann::ordered_json header;
  header["name"] = name;
  header["shape"] = shape;
  header["draws"] = 1;
  header["dtype"] = "float64-le";
  header["order"] = "row-major";
  auto out = open_out(path);
  out << header.dump() << '\n';
  write_values(out, values);
}

std::vector<double> read_array(const fs::path& path, std::vector<std::size_t>* shape) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("missing array file: " + path.string());
  const auto header = read_header(in, path);
  const auto s = header.at("shape").get<std::vector<std::size_t>>();
  if (shape) *shape = s;
  return read_values(in, product(s), path);
}

void save_chain(const fs::path& dir, const sampler::ChainResult& result, bool csv) {
  fs::create_directories(dir);
  for (const char* name : kSeries) {
    const DrawSeries& series = result.draws.at(name);
    write_series(dir / (std::string(name) + ".bin"), series, result.draws.policy);
    if (csv) write_series_csv(dir / (std::string(name) + ".csv"), series);
  }
  const std::size_t G = result.f_mean.size(), S = G ? result.f_mean.front().size() : 0;
  for (std::size_t g = 0; g < G; ++g) {
    const auto K = static_cast<std::size_t>(result.f_mean[g].front().rows());
    const auto T = static_cast<std::size_t>(result.f_mean[g].front().cols());
    std::vector<double> f, h;
    for (std::size_t s = 0; s < S; ++s) {
      append_row_major(f, result.f_mean[g][s]);
      append_row_major(h, result.h_mean[g][s]);
    }
    write_array(dir / ("f_mean_g" + std::to_string(g) + ".bin"), "f_mean", {S, K, T}, f);
    write_array(dir / ("h_mean_g" + std::to_string(g) + ".bin"), "h_mean", {S, K, T}, h);
  }
  std::vector<double> ref;
  for (const Matrix& m : result.reference) append_row_major(ref, m);
  const auto N = result.reference.empty() ? 0 : static_cast<std::size_t>(result.reference.front().rows());
  const auto K = result.reference.empty() ? 0 : static_cast<std::size_t>(result.reference.front().cols());
  write_array(dir / "reference.bin", "reference", {result.reference.size(), N, K}, ref);

  std::ofstream trace(dir / "trace.csv");
  trace << "sweep,loglik,nonzeros\n";
  for (std::size_t i = 0; i < result.trace_loglik.size(); ++i)
    trace << (i + 1) << ',' << ingest::format_double(result.trace_loglik[i]) << ',' << result.trace_nonzeros[i] << '\n';
  std::ofstream acc(dir / "acceptance.json");
  acc << result.acceptance.dump(2) << '\n';
}

StoredChain load_chain(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ValidationError("missing chain directory: " + dir.string());
  StoredChain out;
  for (const char* name : kSeries) {
    DrawSeries s = read_series(dir / (std::string(name) + ".bin"));
    out.draws.series[name] = std::move(s);
  }
  {
    std::ifstream in(dir / "lambda.bin", std::ios::binary);
    const auto header = read_header(in, dir / "lambda.bin");
    out.draws.policy = {header.value("total", 0L), header.value("burn_in", 0L), header.value("thin", 1L)};
  }
  std::vector<std::size_t> shape;
  const std::vector<double> ref = read_array(dir / "reference.bin", &shape);
  if (shape.size() != 3) throw ValidationError("malformed reference array");
  for (std::size_t s = 0; s < shape[0]; ++s)
    out.reference.push_back(from_row_major(std::span(ref).subspan(s * shape[1] * shape[2], shape[1] * shape[2]),
                                           shape[1], shape[2]));
  for (int g = 0;; ++g) {
    const fs::path fp = dir / ("f_mean_g" + std::to_string(g) + ".bin");
    if (!fs::exists(fp)) break;
    std::vector<std::size_t> fs_shape;
    const auto f = read_array(fp, &fs_shape);
    const auto h = read_array(dir / ("h_mean_g" + std::to_string(g) + ".bin"));
    const std::size_t block = fs_shape[1] * fs_shape[2];
    out.f_mean.emplace_back();
    out.h_mean.emplace_back();
    for (std::size_t s = 0; s < fs_shape[0]; ++s) {
      out.f_mean.back().push_back(from_row_major(std::span(f).subspan(s * block, block), fs_shape[1], fs_shape[2]));
      out.h_mean.back().push_back(from_row_major(std::span(h).subspan(s * block, block), fs_shape[1], fs_shape[2]));
    }
  }
  return out;
}

}  // namespace bicnet::store
