#pragma once

#include <mutex>

namespace textxai::detail {

// The serial HDF5 build is not thread-safe; every HDF5 call holds this.
inline std::mutex& hdf5_mutex() {
  static std::mutex mu;
  return mu;
}

}  // namespace textxai::detail
