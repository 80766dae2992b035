#ifndef MACROQ_VERSION_HPP
#define MACROQ_VERSION_HPP

namespace macroq {

inline constexpr const char* version = "0.1.0";

}

#endif
