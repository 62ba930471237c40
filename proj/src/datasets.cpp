#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>

#include "ndp/envs.hpp"
#include "json.hpp"

namespace ndp {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

double parse_real(const std::string& s, int line_no) {
  try {
    size_t used = 0;
    double v = std::stod(s, &used);
    while (used < s.size() && std::isspace(static_cast<unsigned char>(s[used])))
      ++used;
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    fail(ErrorKind::Parse,
         "line " + std::to_string(line_no) + ": bad number '" + s + "'");
  }
}

}  // namespace

std::pair<Dataset, Dataset> load_digits_csv(const std::string& path,
                                            std::uint64_t split_seed) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open " + path);

  std::vector<std::vector<double>> pixels;
  std::vector<int> labels;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = split_csv(line);
    if (fields.size() != 65)
      fail(ErrorKind::Parse, "line " + std::to_string(line_no) + ": expected 65 values, got " +
                                 std::to_string(fields.size()));
    std::vector<double> row(64);
    for (int i = 0; i < 64; ++i) {
      double v = parse_real(fields[i], line_no);
      if (v < 0.0 || v > 16.0)
        fail(ErrorKind::Parse, "line " + std::to_string(line_no) +
                                   ": pixel out of [0,16] range");
      row[i] = v / 16.0;
    }
    double lab = parse_real(fields[64], line_no);
    int label = static_cast<int>(lab);
    if (lab != label || label < 0 || label > 9)
      fail(ErrorKind::Parse,
           "line " + std::to_string(line_no) + ": label out of range 0-9");
    pixels.push_back(std::move(row));
    labels.push_back(label);
  }
  if (pixels.empty()) fail(ErrorKind::Parse, path + ": no data rows");

  int n = static_cast<int>(pixels.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = make_rng(split_seed);
  std::shuffle(order.begin(), order.end(), rng);
  int n_train = n * 4 / 5;

  auto build = [&](int from, int to) {
    Dataset d;
    d.discrete = true;
    d.inputs = Tensor(to - from, 64);
    for (int r = from; r < to; ++r) {
      int src = order[r];
      for (int j = 0; j < 64; ++j) d.inputs.at(r - from, j) = pixels[src][j];
      d.labels.push_back(labels[src]);
    }
    return d;
  };
  return {build(0, n_train), build(n_train, n)};
}

Dataset load_trajectories_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open " + path);
  std::string header;
  if (!std::getline(in, header))
    fail(ErrorKind::Parse, path + ": missing header row");

  int obs_dim = -1, act_dim = -1, discrete = -1;
  for (const auto& field : split_csv(header)) {
    auto eq = field.find('=');
    if (eq == std::string::npos)
      fail(ErrorKind::Parse, "header: expected key=value, got '" + field + "'");
    std::string key = field.substr(0, eq);
    int value = static_cast<int>(parse_real(field.substr(eq + 1), 1));
    if (key == "obs_dim") obs_dim = value;
    else if (key == "act_dim") act_dim = value;
    else if (key == "discrete") discrete = value;
    else fail(ErrorKind::Parse, "header: unknown key '" + key + "'");
  }
  if (obs_dim < 1 || act_dim < 1 || discrete < 0)
    fail(ErrorKind::Parse, "header must declare obs_dim, act_dim and discrete");

  std::vector<double> obs_data;
  std::vector<double> act_data;
  std::vector<int> labels;
  int rows = 0, line_no = 1;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = split_csv(line);
    if (static_cast<int>(fields.size()) != obs_dim + act_dim)
      fail(ErrorKind::Parse, "line " + std::to_string(line_no) + ": expected " +
                                 std::to_string(obs_dim + act_dim) +
                                 " values, got " + std::to_string(fields.size()));
    for (int i = 0; i < obs_dim; ++i)
      obs_data.push_back(parse_real(fields[i], line_no));
    if (discrete && act_dim == 1) {
      double a = parse_real(fields[obs_dim], line_no);
      if (a != static_cast<int>(a) || a < 0)
        fail(ErrorKind::Parse,
             "line " + std::to_string(line_no) + ": discrete action must be a"
             " nonnegative integer");
      labels.push_back(static_cast<int>(a));
    } else {
      for (int i = 0; i < act_dim; ++i)
        act_data.push_back(parse_real(fields[obs_dim + i], line_no));
    }
    ++rows;
  }

  Dataset d;
  d.discrete = discrete && act_dim == 1;
  d.inputs = Tensor::from_rows(rows, obs_dim, std::move(obs_data));
  if (d.discrete)
    d.labels = std::move(labels);
  else
    d.actions = Tensor::from_rows(rows, act_dim, std::move(act_data));
  return d;
}

void write_trajectories_csv(const std::string& path, const Dataset& data,
                            const TrajectoryManifest& manifest) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot write " + path);
  out << "obs_dim=" << manifest.obs_dim << ",act_dim=" << manifest.act_dim
      << ",discrete=" << (manifest.discrete ? 1 : 0) << "\n";
  out.precision(17);
  for (int r = 0; r < data.rows(); ++r) {
    for (int j = 0; j < data.inputs.cols; ++j) {
      if (j) out << ",";
      out << data.inputs.at(r, j);
    }
    if (data.discrete) {
      out << "," << data.labels[r];
    } else {
      for (int j = 0; j < data.actions.cols; ++j) out << "," << data.actions.at(r, j);
    }
    out << "\n";
  }
  if (!out) fail(ErrorKind::Io, "failed writing " + path);

  nlohmann::json j;
  j["obs_dim"] = manifest.obs_dim;
  j["act_dim"] = manifest.act_dim;
  j["discrete"] = manifest.discrete;
  j["generator_reward"] = manifest.generator_reward;
  std::ofstream mout(path + ".manifest.json");
  if (!mout) fail(ErrorKind::Io, "cannot write " + path + ".manifest.json");
  mout << j.dump(2) << "\n";
}

TrajectoryManifest load_trajectory_manifest(const std::string& csv_path) {
  std::ifstream in(csv_path + ".manifest.json");
  if (!in) fail(ErrorKind::Io, "cannot open " + csv_path + ".manifest.json");
  try {
    nlohmann::json j = nlohmann::json::parse(in);
    TrajectoryManifest m;
    m.obs_dim = j.at("obs_dim").get<int>();
    m.act_dim = j.at("act_dim").get<int>();
    m.discrete = j.at("discrete").get<bool>();
    m.generator_reward = j.at("generator_reward").get<double>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Parse, std::string("trajectory manifest: ") + e.what());
  }
}

}  // namespace ndp
