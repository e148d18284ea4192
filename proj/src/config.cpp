#include "hamr/config.hpp"

#include <fstream>
#include <sstream>

namespace hamr {

Method parse_method(const std::string& s) {
  if (s == "hamr") return Method::Hamr;
  if (s == "focal") return Method::Focal;
  if (s == "dice") return Method::Dice;
  if (s == "icf") return Method::Icf;
  if (s == "en") return Method::En;
  if (s == "plain") return Method::Plain;
  throw ConfigError("unknown method '" + s + "'");
}

std::string method_name(Method m) {
  switch (m) {
    case Method::Hamr: return "hamr";
    case Method::Focal: return "focal";
    case Method::Dice: return "dice";
    case Method::Icf: return "icf";
    case Method::En: return "en";
    default: return "plain";
  }
}

namespace {

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("bad numeric value for " + key + ": '" + value + "'");
  }
}

int to_int(const std::string& key, const std::string& value) {
  double v = to_double(key, value);
  int i = static_cast<int>(v);
  if (static_cast<double>(i) != v) throw ConfigError(key + " must be an integer");
  return i;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true") return true;
  if (value == "0" || value == "false") return false;
  throw ConfigError(key + " must be 0/1 or true/false");
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  if (key == "method") method = parse_method(value);
  else if (key == "learning_rate") learning_rate = to_double(key, value);
  else if (key == "wnet_lr") wnet_lr = to_double(key, value);
  else if (key == "meta_update_lr") meta_update_lr = to_double(key, value);
  else if (key == "gamma_ema") gamma_ema = to_double(key, value);
  else if (key == "hardness_alpha") hardness_alpha = to_double(key, value);
  else if (key == "knn_lambda") knn_lambda = to_double(key, value);
  else if (key == "knn_k") knn_k = to_int(key, value);
  else if (key == "knn_ratio") knn_ratio = to_double(key, value);
  else if (key == "refresh_interval") refresh_interval = to_int(key, value);
  else if (key == "batch_size") batch_size = to_int(key, value);
  else if (key == "epochs") epochs = to_int(key, value);
  else if (key == "clip_min") clip_min = to_double(key, value);
  else if (key == "clip_max") clip_max = to_double(key, value);
  else if (key == "epsilon") epsilon = to_double(key, value);
  else if (key == "loss_agg") {
    if (value == "mean_ce") loss_agg = LossAgg::MeanCE;
    else if (value == "max_token") loss_agg = LossAgg::MaxToken;
    else throw ConfigError("loss_agg must be mean_ce or max_token");
  } else if (key == "metric") {
    if (value == "cosine") metric = Metric::Cosine;
    else if (value == "l2") metric = Metric::L2;
    else throw ConfigError("metric must be cosine or l2");
  } else if (key == "seed") seed = static_cast<std::uint64_t>(to_double(key, value));
  else if (key == "dataset") dataset = value;
  else if (key == "embeddings") embeddings = value;
  else if (key == "hidden_dim") hidden_dim = to_int(key, value);
  else if (key == "wnet_hidden_dim") wnet_hidden_dim = to_int(key, value);
  else if (key == "meta_batch") meta_batch = to_int(key, value);
  else if (key == "rebuild_meta_set") rebuild_meta_set = to_bool(key, value);
  else if (key == "en_beta") en_beta = to_double(key, value);
  else if (key == "focal_gamma") focal_gamma = to_double(key, value);
  else if (key == "dice_eps") dice_eps = to_double(key, value);
  else if (key == "exclude_empty") exclude_empty = to_bool(key, value);
  else if (key == "verbose_trace") verbose_trace = to_bool(key, value);
  else throw ConfigError("unknown config key '" + key + "'");
}

void RunConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (!(wnet_lr > 0.0)) throw ConfigError("wnet_lr must be positive");
  if (meta_update_lr < 0.0) throw ConfigError("meta_update_lr must be nonnegative");
  if (!(gamma_ema >= 0.0 && gamma_ema <= 1.0)) throw ConfigError("gamma_ema must be in [0,1]");
  if (!(hardness_alpha > 0.0)) throw ConfigError("hardness_alpha must be positive");
  if (knn_lambda < 0.0) throw ConfigError("knn_lambda must be nonnegative");
  if (knn_k < 1) throw ConfigError("knn_k must be >= 1");
  if (!(knn_ratio > 0.0 && knn_ratio <= 1.0)) throw ConfigError("knn_ratio must be in (0,1]");
  if (refresh_interval < 1) throw ConfigError("refresh_interval must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (epochs < 0) throw ConfigError("epochs must be nonnegative");
  if (!(clip_min > 0.0 && clip_max > clip_min))
    throw ConfigError("clip range must satisfy 0 < clip_min < clip_max");
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (hidden_dim < 0) throw ConfigError("hidden_dim must be nonnegative");
  if (wnet_hidden_dim < 1) throw ConfigError("wnet_hidden_dim must be >= 1");
  if (meta_batch < 0) throw ConfigError("meta_batch must be nonnegative");
  if (!(en_beta >= 0.0 && en_beta < 1.0)) throw ConfigError("en_beta must be in [0,1)");
  if (focal_gamma < 0.0) throw ConfigError("focal_gamma must be nonnegative");
  if (dice_eps < 0.0) throw ConfigError("dice_eps must be nonnegative");
}

std::map<std::string, std::string> RunConfig::as_map() const {
  std::map<std::string, std::string> m;
  auto num = [](double v) {
    std::ostringstream ss;
    ss.precision(17);
    ss << v;
    return ss.str();
  };
  m["method"] = method_name(method);
  m["learning_rate"] = num(learning_rate);
  m["wnet_lr"] = num(wnet_lr);
  m["meta_update_lr"] = num(meta_update_lr);
  m["gamma_ema"] = num(gamma_ema);
  m["hardness_alpha"] = num(hardness_alpha);
  m["knn_lambda"] = num(knn_lambda);
  m["knn_k"] = std::to_string(knn_k);
  m["knn_ratio"] = num(knn_ratio);
  m["refresh_interval"] = std::to_string(refresh_interval);
  m["batch_size"] = std::to_string(batch_size);
  m["epochs"] = std::to_string(epochs);
  m["clip_min"] = num(clip_min);
  m["clip_max"] = num(clip_max);
  m["epsilon"] = num(epsilon);
  m["loss_agg"] = loss_agg == LossAgg::MeanCE ? "mean_ce" : "max_token";
  m["metric"] = metric == Metric::Cosine ? "cosine" : "l2";
  m["seed"] = std::to_string(seed);
  m["dataset"] = dataset;
  m["embeddings"] = embeddings;
  m["hidden_dim"] = std::to_string(hidden_dim);
  m["wnet_hidden_dim"] = std::to_string(wnet_hidden_dim);
  m["meta_batch"] = std::to_string(meta_batch);
  m["rebuild_meta_set"] = rebuild_meta_set ? "1" : "0";
  m["en_beta"] = num(en_beta);
  m["focal_gamma"] = num(focal_gamma);
  m["dice_eps"] = num(dice_eps);
  m["exclude_empty"] = exclude_empty ? "1" : "0";
  m["verbose_trace"] = verbose_trace ? "1" : "0";
  return m;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  RunConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    lineno++;
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
    cfg.set(line.substr(0, eq), line.substr(eq + 1));
  }
  return cfg;
}

}  // namespace hamr
