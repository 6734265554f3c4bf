"""Pure-Python emission kernel; fallback for the compiled one in _kernel.pyx.

Patch arithmetic is two's-complement 64-bit: intermediate sums wrap at 64
bits, after which 32-bit patches must land in signed-32 range.
"""

import struct

_MASK64 = (1 << 64) - 1
_SIGN64 = 1 << 63
_I32_MIN = -(1 << 31)
_I32_MAX = (1 << 31) - 1

_pack_u32 = struct.Struct("<I").pack_into
_pack_u64 = struct.Struct("<Q").pack_into


def emit_node(dest, dest_off, dest_addr, region_base, code, copy_len,
              sites, widths, flags, addends, tkinds, targs, conts, offs,
              vals, deferred_mask):
    """patch_and_copy with in-loop hole-value resolution: continuation
    ordinals become successor addresses via `conts`/`offs`, bound value
    ordinals read from `vals`, and deferred/external holes get link-time
    placeholders."""
    dest[dest_off : dest_off + copy_len] = code[:copy_len]
    for i in range(len(sites)):
        site = sites[i]
        width = widths[i]
        if site + (width >> 3) > copy_len:
            continue
        f = flags[i]
        tkind = tkinds[i]
        targ = targs[i]
        if tkind == 0:
            value = region_base + offs[conts[targ]]
        elif tkind == 1 and not (deferred_mask >> targ) & 1:
            value = vals[targ]
        elif f & 1:
            value = dest_addr + site
        else:
            value = 0
        v = addends[i]
        if f & 2:
            v += value
        if f & 1:
            v -= dest_addr + site
        v &= _MASK64
        if v & _SIGN64:
            v -= 1 << 64
        if width == 32:
            if not _I32_MIN <= v <= _I32_MAX:
                return i
            _pack_u32(dest, dest_off + site, v & 0xFFFFFFFF)
        else:
            _pack_u64(dest, dest_off + site, v & _MASK64)
    return -1


def patch_and_copy(dest, dest_off, dest_addr, code, copy_len, sites, widths, flags, addends, values):
    """Copy `copy_len` code bytes to dest[dest_off:] and apply patches.

    Patch sites past copy_len (inside an elided tail) are skipped. Returns
    -1 on success or the index of the first 32-bit patch whose value does
    not fit.
    """
    dest[dest_off : dest_off + copy_len] = code[:copy_len]
    for i in range(len(sites)):
        site = sites[i]
        width = widths[i]
        if site + (width >> 3) > copy_len:
            continue
        f = flags[i]
        v = addends[i]
        if f & 2:
            v += values[i]
        if f & 1:
            v -= dest_addr + site
        v &= _MASK64
        if v & _SIGN64:
            v -= 1 << 64
        if width == 32:
            if not _I32_MIN <= v <= _I32_MAX:
                return i
            _pack_u32(dest, dest_off + site, v & 0xFFFFFFFF)
        else:
            _pack_u64(dest, dest_off + site, v & _MASK64)
    return -1
