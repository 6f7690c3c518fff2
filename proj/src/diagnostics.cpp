#include "eventaware/diagnostics.hpp"

#include <iostream>
#include <mutex>

#include "eventaware/error.hpp"
#include "json.hpp"

namespace eventaware {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::parse: return "parse";
    case ErrorKind::empty_corpus: return "empty_corpus";
    case ErrorKind::duplicate_id: return "duplicate_id";
    case ErrorKind::missing_assignment: return "missing_assignment";
    case ErrorKind::invalid_metadata: return "invalid_metadata";
    case ErrorKind::undefined_distribution: return "undefined_distribution";
    case ErrorKind::spec_validation: return "spec_validation";
    case ErrorKind::config: return "config";
    case ErrorKind::shape: return "shape";
    case ErrorKind::index: return "index";
    case ErrorKind::numeric: return "numeric";
    case ErrorKind::parameter: return "parameter";
    case ErrorKind::io: return "io";
    case ErrorKind::compatibility: return "compatibility";
    case ErrorKind::empty_evaluation: return "empty_evaluation";
    case ErrorKind::mode: return "mode";
  }
  return "unknown";
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::numeric:
    case ErrorKind::shape:
    case ErrorKind::index:
      return 1;
    default:
      return 2;
  }
}

namespace diag {
namespace {

std::mutex sink_mutex;

void stderr_sink(const Warning& w) { std::cerr << to_json_line(w) << '\n'; }

std::function<void(const Warning&)>& current_sink() {
  static std::function<void(const Warning&)> sink = stderr_sink;
  return sink;
}

}  // namespace

std::string to_json_line(const Warning& w) {
  nlohmann::ordered_json j;
  j["level"] = "warning";
  j["code"] = w.code;
  j["message"] = w.message;
  for (const auto& [k, v] : w.fields) j[k] = v;
  return j.dump();
}

void warn(Warning w) {
  std::lock_guard lock(sink_mutex);
  current_sink()(w);
}

ScopedCapture::ScopedCapture() {
  std::lock_guard lock(sink_mutex);
  previous_ = current_sink();
  current_sink() = [this](const Warning& w) { captured_.push_back(w); };
}

ScopedCapture::~ScopedCapture() {
  std::lock_guard lock(sink_mutex);
  current_sink() = previous_;
}

}  // namespace diag
}  // namespace eventaware
