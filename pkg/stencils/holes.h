/* Shared vocabulary of the stencil generator sources.
 *
 * A hole is the address of a reserved extern symbol: the compiler cannot
 * resolve it, so it emits a relocation record that tells the extractor
 * exactly where the missing value sits in the code. Narrow holes are plain
 * one-byte externs (imm32 under the small code model); wide holes are
 * declared as giant arrays so the medium code model emits a 64-bit
 * absolute relocation. Control transfers to other stencils are guaranteed
 * tail calls to extern continuation functions.
 *
 * The driver (the library builder) instantiates each variant with -D
 * parameters: operand locations, slot positions, hole ordinals and the
 * continuation argument lists. Never compare two holes against each other
 * or a hole against zero: distinct extern symbols are never equal and
 * never null, so the compiler would fold such tests away.
 */
#ifndef CP_HOLES_H
#define CP_HOLES_H

#include <stdint.h>

typedef struct {
    uint64_t v;
    uint64_t e;
} CpRet;

/* error codes, matching the runtime's contract */
#define CP_ERR_EXTERNAL 1
#define CP_TRAP_DIV 2
#define CP_TRAP_FRAME 3

/* operand locations */
#define CP_LOC_REG 0
#define CP_LOC_STACK 1
#define CP_LOC_LIT 2

/* operand types */
#define CP_TY_I32 0
#define CP_TY_I64 1
#define CP_TY_F64 2
#define CP_TY_BOOL 3
#define CP_TY_PTR 4

/* arithmetic / comparison operator codes */
#define CP_OP_ADD 0
#define CP_OP_SUB 1
#define CP_OP_MUL 2
#define CP_OP_DIV 3
#define CP_OP_MOD 4
#define CP_CMP_EQ 0
#define CP_CMP_NE 1
#define CP_CMP_LT 2
#define CP_CMP_LE 3
#define CP_CMP_GT 4
#define CP_CMP_GE 5

#define CP_GLUE_(a, b) a##b
#define CP_GLUE(a, b) CP_GLUE_(a, b)

/* the uniform stencil signature: frame base plus five value slots */
#define CP_ARGS \
    uint64_t cp_f, uint64_t s1, uint64_t s2, uint64_t s3, uint64_t s4, uint64_t s5
#define CP_SLOT(n) CP_GLUE(s, n)

#define CP_DECLARE_CONT(ord) \
    extern CpRet CP_GLUE(__cp_cont_, ord)( \
        uint64_t, uint64_t, uint64_t, uint64_t, uint64_t, uint64_t);
#define CP_CONT(ord) CP_GLUE(__cp_cont_, ord)
#define CP_TAIL __attribute__((musttail)) return

/* value holes */
#define CP_DECLARE_VALUE(ord) extern char CP_GLUE(__cp_val_, ord);
#define CP_DECLARE_VALUE_WIDE(ord) extern char CP_GLUE(__cp_val_, ord)[1u << 30];
#define CP_VAL(ord) ((uint64_t)(uintptr_t)&CP_GLUE(__cp_val_, ord))
#define CP_VAL_I32(ord) ((int32_t)(intptr_t)&CP_GLUE(__cp_val_, ord))

/* a call target is a value hole used as a function */
#define CP_DECLARE_TARGET(ord) \
    extern CpRet CP_GLUE(__cp_val_, ord)( \
        uint64_t, uint64_t, uint64_t, uint64_t, uint64_t, uint64_t);
#define CP_TARGET(ord) CP_GLUE(__cp_val_, ord)

/* Marking error paths likely makes the compiler lay them out inline and
 * sink the hot tail call to the end of the function, where the extractor
 * expects the elidable trailing jump. */
#define CP_UNWIND_IF(cond) __builtin_expect((cond), 1)

/* frame slot access: locals and spilled temporaries are 8-byte slots */
#define CP_FRAME_U64(off) (*(uint64_t *)(cp_f + (off)))

static inline double cp_bits_f64(uint64_t b) {
    union { uint64_t u; double d; } x;
    x.u = b;
    return x.d;
}

static inline uint64_t cp_f64_bits(double d) {
    union { uint64_t u; double d; } x;
    x.d = d;
    return x.u;
}

/* canonical (sign-extended) payload of an i32 value */
#define CP_CANON_I32(x) ((uint64_t)(int64_t)(int32_t)(x))

#endif
