#ifndef PPB_VERSION_HPP
#define PPB_VERSION_HPP

namespace ppb {
inline constexpr const char* VERSION = "0.1.0";
}

#endif
