#ifndef CAC_IO_HPP
#define CAC_IO_HPP

#include <string>

namespace cac {

/// Shortest decimal string that parses back to the same double.
std::string format_real(double value);

std::string read_file(const std::string& path);

/// Creates parent directories as needed.
void write_file(const std::string& path, const std::string& contents);

}  // namespace cac

#endif  // CAC_IO_HPP
