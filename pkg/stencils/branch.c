/* Two-way branch on a boolean value: continuation 0 when true.
 * Parameters: LOC0, POS_COND. Holes: [ORD_COND]. */
#include "holes.h"

#if LOC0 == CP_LOC_STACK
CP_DECLARE_VALUE(ORD_COND)
#define CP_COND_BITS CP_FRAME_U64(CP_VAL(ORD_COND))
#else
#define CP_COND_BITS CP_SLOT(POS_COND)
#endif
CP_DECLARE_CONT(0)
CP_DECLARE_CONT(1)

CpRet CP_STENCIL(CP_ARGS)
{
    if (CP_COND_BITS) {
        CP_TAIL CP_CONT(0)(CP_CONT_ARGS);
    }
    CP_TAIL CP_CONT(1)(CP_CONT_ARGS);
}
