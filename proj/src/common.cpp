#include "mplc/common.hpp"

#include <iostream>
#include <mutex>
#include <utility>

namespace mplc {

namespace {
std::mutex g_warn_mutex;
WarningHandler g_handler;  // empty = default stderr
}  // namespace

void set_warning_handler(WarningHandler handler) {
  std::lock_guard<std::mutex> lock(g_warn_mutex);
  g_handler = std::move(handler);
}

void warn(const std::string& message) {
  std::lock_guard<std::mutex> lock(g_warn_mutex);
  if (g_handler) {
    g_handler(message);
  } else {
    std::cerr << "[mplc warning] " << message << "\n";
  }
}

}  // namespace mplc
