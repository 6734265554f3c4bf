/* Call a host function through its adapter: marshal the arguments into the
 * frame's argument block, call the adapter with the block address, unwind
 * on its error flag, and read the result from slot 0.
 * Parameters: N, LOC0.. (args), POS_*, SPILL.
 * Holes: ORD_ARGBLOCK, [ORD_ARGi...], ORD_ADAPTER, [ORD_OUT]. */
#include "holes.h"

CP_DECLARE_VALUE(ORD_ARGBLOCK)
CP_DECLARE_VALUE_WIDE(ORD_ADAPTER)

#if N >= 1
#if LOC0 == CP_LOC_STACK
CP_DECLARE_VALUE(ORD_ARG0)
#define CP_A0 CP_FRAME_U64(CP_VAL(ORD_ARG0))
#else
#define CP_A0 CP_SLOT(POS_ARG0)
#endif
#endif
#if N >= 2
#if LOC1 == CP_LOC_STACK
CP_DECLARE_VALUE(ORD_ARG1)
#define CP_A1 CP_FRAME_U64(CP_VAL(ORD_ARG1))
#else
#define CP_A1 CP_SLOT(POS_ARG1)
#endif
#endif
#if N >= 3
#if LOC2 == CP_LOC_STACK
CP_DECLARE_VALUE(ORD_ARG2)
#define CP_A2 CP_FRAME_U64(CP_VAL(ORD_ARG2))
#else
#define CP_A2 CP_SLOT(POS_ARG2)
#endif
#endif
#if N >= 4
#if LOC3 == CP_LOC_STACK
CP_DECLARE_VALUE(ORD_ARG3)
#define CP_A3 CP_FRAME_U64(CP_VAL(ORD_ARG3))
#else
#define CP_A3 CP_SLOT(POS_ARG3)
#endif
#endif

#if SPILL
CP_DECLARE_VALUE(ORD_OUT)
#endif
CP_DECLARE_CONT(0)

typedef _Bool (*cp_ext_fn)(uint64_t *);

CpRet CP_STENCIL(CP_ARGS)
{
    uint64_t *blk = (uint64_t *)(cp_f + CP_VAL(ORD_ARGBLOCK));
#if N >= 1
    blk[0] = CP_A0;
#endif
#if N >= 2
    blk[1] = CP_A1;
#endif
#if N >= 3
    blk[2] = CP_A2;
#endif
#if N >= 4
    blk[3] = CP_A3;
#endif
    if (CP_UNWIND_IF(((cp_ext_fn)CP_VAL(ORD_ADAPTER))(blk)))
        return (CpRet){0, CP_ERR_EXTERNAL};
#if SPILL
    CP_FRAME_U64(CP_VAL(ORD_OUT)) = blk[0];
    CP_TAIL CP_CONT(0)(CP_CONT_ARGS_CLOBBERED(0));
#else
    CP_TAIL CP_CONT(0)(CP_CONT_ARGS_CLOBBERED(blk[0]));
#endif
}
