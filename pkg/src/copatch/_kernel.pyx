# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled emission kernel: stencil copy plus hole patching.

Semantics mirror _kernel_py exactly; the acceptance suite's patch-algebra
oracle runs against whichever backend is active.
"""

from libc.string cimport memcpy
from libc.stdint cimport int64_t, uint64_t, uint32_t, uint8_t


def emit_node(dest, Py_ssize_t dest_off, uint64_t dest_addr, uint64_t region_base,
              const unsigned char[::1] code, Py_ssize_t copy_len,
              const unsigned int[::1] sites, const unsigned char[::1] widths,
              const unsigned char[::1] flags, const long long[::1] addends,
              const unsigned char[::1] tkinds, const long long[::1] targs,
              const long long[::1] conts, const long long[::1] offs,
              const long long[::1] vals, uint64_t deferred_mask):
    """Resolve hole values (continuation addresses, bound values, deferred
    placeholders) and patch in one pass. Returns -1, or the index of a
    32-bit patch whose value does not fit."""
    cdef unsigned char[::1] out = dest
    cdef Py_ssize_t i, n = sites.shape[0]
    cdef uint64_t v, value
    cdef int64_t sv, targ
    cdef uint32_t site
    cdef uint8_t width, f, tkind
    cdef unsigned char *base = &out[0] + dest_off

    if copy_len > 0:
        memcpy(base, &code[0], copy_len)

    for i in range(n):
        site = sites[i]
        width = widths[i]
        if site + (width >> 3) > <uint64_t>copy_len:
            continue
        tkind = tkinds[i]
        targ = targs[i]
        f = flags[i]
        if tkind == 0:  # continuation ordinal
            value = region_base + <uint64_t>offs[conts[targ]]
        elif tkind == 1 and not (deferred_mask >> targ) & 1:
            value = <uint64_t>vals[targ]
        elif f & 1:  # deferred pc-relative: self placeholder
            value = dest_addr + site
        else:
            value = 0
        v = <uint64_t>addends[i]
        if f & 2:
            v += value
        if f & 1:
            v -= dest_addr + site
        sv = <int64_t>v
        if width == 32:
            if sv < -0x80000000 or sv > 0x7FFFFFFF:
                return i
            (<uint32_t*>(base + site))[0] = <uint32_t>v
        else:
            (<uint64_t*>(base + site))[0] = v
    return -1


def patch_and_copy(dest, Py_ssize_t dest_off, uint64_t dest_addr,
                   const unsigned char[::1] code, Py_ssize_t copy_len,
                   const unsigned int[::1] sites, const unsigned char[::1] widths,
                   const unsigned char[::1] flags, const long long[::1] addends,
                   const long long[::1] values):
    cdef unsigned char[::1] out = dest
    cdef Py_ssize_t i, n = sites.shape[0]
    cdef uint64_t v
    cdef int64_t sv
    cdef uint32_t site
    cdef uint8_t width, f
    cdef unsigned char *base = &out[0] + dest_off

    if copy_len > 0:
        memcpy(base, &code[0], copy_len)

    for i in range(n):
        site = sites[i]
        width = widths[i]
        if site + (width >> 3) > <uint64_t>copy_len:
            continue
        f = flags[i]
        v = <uint64_t>addends[i]
        if f & 2:
            v += <uint64_t>values[i]
        if f & 1:
            v -= dest_addr + site
        sv = <int64_t>v
        if width == 32:
            if sv < -0x80000000 or sv > 0x7FFFFFFF:
                return i
            (<uint32_t*>(base + site))[0] = <uint32_t>v
        else:
            (<uint64_t*>(base + site))[0] = v
    return -1
