// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "topicfb/data_model.hpp"
#include "topicfb/model.hpp"
#include "topicfb/rng.hpp"

namespace testing {

inline topicfb::PostEvent post(std::string id, std::string user, topicfb::Timestamp t,
                               std::int64_t topic) {
  topicfb::PostEvent p;
  p.post_id = std::move(id);
  p.user_id = std::move(user);
  p.timestamp = t;
  p.topic_id = topic;
  return p;
}

// Fresh directory under the system temp dir, removed on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("topicfb_test_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::filesystem::path operator/(const std::string& name) const { return path / name; }
};

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Random design with every row valid, for objective and optimizer checks.
inline topicfb::Design random_design(int users, int topics, int days, int rows,
                                     std::uint64_t seed) {
  auto rng = topicfb::make_stream(seed, "design", 0);
  std::uniform_int_distribution<int> user(0, users - 1), topic(0, topics - 1),
      day(0, days - 1), bit(0, 1);
  std::normal_distribution<double> normal(0.0, 1.0);
  topicfb::Design d;
  d.num_users = users;
  d.num_topics = topics;
  d.num_days = days;
  d.pref.resize(rows);
  d.feedback.resize(rows);
  d.label.resize(rows);
  d.weight = Eigen::VectorXd::Ones(rows);
  for (int r = 0; r < rows; ++r) {
    d.user.push_back(user(rng));
    d.topic.push_back(topic(rng));
    d.day.push_back(day(rng));
    d.pref(r) = normal(rng);
    d.feedback(r) = normal(rng);
    d.label(r) = bit(rng);
    d.sample_index.push_back(static_cast<std::size_t>(r));
  }
  return d;
}

inline topicfb::ModelParamsd random_params(int users, int topics, int days,
                                           std::uint64_t seed) {
  auto rng = topicfb::make_stream(seed, "params", 0);
  std::normal_distribution<double> normal(0.0, 0.7);
  auto p = topicfb::ModelParamsd::Zero(users, topics, days);
  for (int i = 0; i < users; ++i) {
    p.a(i) = normal(rng);
    p.alpha(i) = normal(rng);
  }
  p.b = normal(rng);
  for (int k = 0; k < topics; ++k) {
    for (int j = 0; j < days; ++j) p.g(k, j) = normal(rng);
  }
  return p;
}

}  // namespace testing

#include "topicfb/synthetic.hpp"

namespace testing {

// A few dozen users on the confounded preset; quick to fit.
inline topicfb::SynthConfig small_synth(const std::string& preset, int users,
                                        std::uint64_t seed) {
  auto c = topicfb::synth_preset(preset);
  c.n_users = users;
  c.max_expected_posts = 90.0;
  c.seed = seed;
  return c;
}

}  // namespace testing
