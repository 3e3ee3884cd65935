#include "fadi/common.hpp"

#include <iostream>
#include <mutex>
#include <set>

namespace fadi {

namespace {
std::mutex g_warn_mutex;
WarningHandler g_warn_handler;
std::set<std::string> g_warned;
}  // namespace

void require(bool cond, const std::string& msg) {
  if (!cond) throw InvalidArgument(msg);
}

void require_finite(const Matrix& a, const char* what) {
  if (!a.allFinite()) throw InvalidArgument(std::string(what) + ": non-finite entries");
}

void set_warning_handler(WarningHandler handler) {
  std::lock_guard<std::mutex> lock(g_warn_mutex);
  g_warn_handler = std::move(handler);
}

void warn(const std::string& msg) {
  std::lock_guard<std::mutex> lock(g_warn_mutex);
  if (g_warn_handler) {
    g_warn_handler(msg);
  } else if (g_warned.insert(msg).second) {
    std::cerr << "warning: " << msg << '\n';
  }
}

}  // namespace fadi
