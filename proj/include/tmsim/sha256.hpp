#ifndef TMSIM_SHA256_HPP
#define TMSIM_SHA256_HPP

#include <string>
#include <string_view>

namespace tmsim {

// FIPS 180-4 SHA-256, hex digest. Used to fingerprint scenario specs and
// exported files in the run manifest.
std::string sha256_hex(std::string_view data);

std::string sha256_file_hex(const std::string& path);

}  // namespace tmsim

#endif
