#pragma once

#include <functional>
#include <string>
#include <vector>

namespace eventaware::diag {

/// A structured warning. Emitted as one JSON object per line on stderr.
struct Warning {
  std::string code;
  std::string message;
  std::vector<std::pair<std::string, std::string>> fields;
};

void warn(Warning w);

/// Redirects warnings to a local buffer for the lifetime of the object.
class ScopedCapture {
 public:
  ScopedCapture();
  ~ScopedCapture();
  ScopedCapture(const ScopedCapture&) = delete;
  ScopedCapture& operator=(const ScopedCapture&) = delete;

  const std::vector<Warning>& warnings() const { return captured_; }

 private:
  std::vector<Warning> captured_;
  std::function<void(const Warning&)> previous_;
};

std::string to_json_line(const Warning& w);

}  // namespace eventaware::diag
