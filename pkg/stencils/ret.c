/* Return from a generated function with a cleared error flag.
 * Parameters: LOC0 absent for void returns, else the value source;
 * [TY for literal returns], POS_VAL. Holes: [ORD_VAL | ORD_LIT]. */
#include "holes.h"

#ifndef LOC0
#define CP_RET_BITS 0
#elif LOC0 == CP_LOC_STACK
CP_DECLARE_VALUE(ORD_VAL)
#define CP_RET_BITS CP_FRAME_U64(CP_VAL(ORD_VAL))
#elif LOC0 == CP_LOC_LIT
#define CP_LIT_ORD ORD_LIT
#include "cp_lit.inc"
#define CP_RET_BITS CP_LIT_BITS
#else
#define CP_RET_BITS CP_SLOT(POS_VAL)
#endif

CpRet CP_STENCIL(CP_ARGS)
{
    return (CpRet){CP_RET_BITS, 0};
}
