#ifndef BMMIX_VERSION_HPP
#define BMMIX_VERSION_HPP

namespace bmmix {

inline constexpr const char* version_string = "0.1.0";

}  // namespace bmmix

#endif  // BMMIX_VERSION_HPP
