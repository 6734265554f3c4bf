/* Store into a local variable's frame slot.
 * Parameters: LOC0 (source), [TY for literal sources], POS_SRC.
 * Holes: ORD_VAR, [ORD_SRC | ORD_LIT]. */
#include "holes.h"

CP_DECLARE_VALUE(ORD_VAR)
#if LOC0 == CP_LOC_STACK
CP_DECLARE_VALUE(ORD_SRC)
#define CP_SRC_BITS CP_FRAME_U64(CP_VAL(ORD_SRC))
#elif LOC0 == CP_LOC_LIT
#define CP_LIT_ORD ORD_LIT
#include "cp_lit.inc"
#define CP_SRC_BITS CP_LIT_BITS
#else
#define CP_SRC_BITS CP_SLOT(POS_SRC)
#endif
CP_DECLARE_CONT(0)

CpRet CP_STENCIL(CP_ARGS)
{
    CP_FRAME_U64(CP_VAL(ORD_VAR)) = CP_SRC_BITS;
    CP_TAIL CP_CONT(0)(CP_CONT_ARGS);
}
