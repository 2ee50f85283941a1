#pragma once

#ifdef __GLIBC__
#include <malloc.h>
#endif

namespace joma::lab {

// The trainer allocates and frees multi-megabyte temporaries every step; keep them
// on the heap instead of a fresh mmap each time.
inline void tune_allocator()
{
#ifdef __GLIBC__
    mallopt(M_MMAP_THRESHOLD, 256 << 20);
    mallopt(M_TRIM_THRESHOLD, 256 << 20);
#endif
}

} // namespace joma::lab
