//! Processing functions: the registry, the call context, and the builtins.
//!
//! A function transforms the payload of the thing being processed (identity
//! is preserved — the thing keeps its id) and may write stores of the owning
//! machine. Builtin contracts:
//!
//! * `incr_mod`  — at a stage tagged with store name S: `S := (S+1) mod n`
//!   (`n` is the owner's int store named `n`); payload becomes the new value.
//! * `decr_mod`  — same with `-1`; `mod` is mathematical, result in `[0, n)`.
//! * `compare_eq` — record payload `{a, b}` becomes `{result: a == b}`.
//! * `xor_encrypt` / `xor_decrypt` — int payload XORed with the owner's int
//!   store `key`; applying one then the other with equal keys is identity.
//! * `gen_random_int` — payload becomes a fresh draw from the seeded
//!   generator, in `[0, 1000000)`.
//! * `extract_field` — record payload becomes its field named by the stage
//!   tag.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use rand_core::RngCore;

use crate::model::{MachineId, Model};
use crate::value::Value;

/// Read view over the current store values, rooted at the owning machine.
/// Lookup tries the owner's stores first, then any globally unique name.
pub struct StoreView<'a> {
    pub(crate) model: &'a Model,
    pub(crate) owner: MachineId,
    pub(crate) values: &'a [Value],
}

impl<'a> StoreView<'a> {
    pub fn get(&self, name: &str) -> Option<&'a Value> {
        let owned = self.model.machine(self.owner).stores.iter().find(|&&s| {
            self.model.store(s).name == name
        });
        if let Some(&id) = owned {
            return Some(&self.values[id.0 as usize]);
        }
        let mut hits = self
            .model
            .store_ids()
            .filter(|&s| self.model.store(s).name == name);
        let first = hits.next()?;
        if hits.next().is_some() {
            return None;
        }
        Some(&self.values[first.0 as usize])
    }

    pub fn get_int(&self, name: &str) -> Result<i64, String> {
        self.get(name)
            .and_then(Value::as_int)
            .ok_or_else(|| format!("needs an int store named {name:?} in the owning machine"))
    }

    pub fn get_str(&self, name: &str) -> Result<&'a str, String> {
        self.get(name)
            .and_then(Value::as_str)
            .ok_or_else(|| format!("needs a string store named {name:?} in the owning machine"))
    }
}

/// Everything a processing function can see.
pub struct FnCtx<'a> {
    pub payload: Value,
    pub thing_type: String,
    /// Tag of the stage the function runs at; several builtins read their
    /// store or field name from it.
    pub stage_tag: Option<String>,
    pub stores: StoreView<'a>,
    pub rng: &'a mut ChaCha8Rng,
}

impl FnCtx<'_> {
    fn tag(&self) -> Result<&str, String> {
        self.stage_tag
            .as_deref()
            .ok_or_else(|| "needs a #tag on its stage".to_string())
    }

    fn payload_int(&self) -> Result<i64, String> {
        self.payload
            .as_int()
            .ok_or_else(|| format!("needs an int payload, found {}", self.payload.kind_name()))
    }
}

/// Result of a processing function: the new payload plus store writes,
/// applied atomically to the owning machine after the function returns.
pub struct FnOutcome {
    pub payload: Value,
    pub writes: Vec<(String, Value)>,
}

impl FnOutcome {
    pub fn payload(payload: Value) -> FnOutcome {
        FnOutcome { payload, writes: Vec::new() }
    }

    pub fn write(mut self, store: &str, value: Value) -> FnOutcome {
        self.writes.push((store.to_string(), value));
        self
    }
}

pub type ProcessingFn = Arc<dyn Fn(&mut FnCtx) -> Result<FnOutcome, String> + Send + Sync>;

#[derive(Clone, Default)]
pub struct FnRegistry {
    fns: BTreeMap<String, ProcessingFn>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("E-FN-DUP: function {0:?} is already registered")]
pub struct FnDup(pub String);

impl FnRegistry {
    pub fn new() -> FnRegistry {
        FnRegistry::default()
    }

    pub fn register<F>(&mut self, name: &str, f: F) -> Result<(), FnDup>
    where
        F: Fn(&mut FnCtx) -> Result<FnOutcome, String> + Send + Sync + 'static,
    {
        if self.fns.contains_key(name) {
            return Err(FnDup(name.to_string()));
        }
        self.fns.insert(name.to_string(), Arc::new(f));
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&ProcessingFn> {
        self.fns.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.fns.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.fns.keys().map(String::as_str)
    }
}

impl std::fmt::Debug for FnRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FnRegistry")
            .field("fns", &self.fns.keys().collect::<Vec<_>>())
            .finish()
    }
}

/// Upper bound (exclusive) for `gen_random_int` draws.
pub const RANDOM_INT_BOUND: u64 = 1_000_000;

pub fn draw_random_int(rng: &mut ChaCha8Rng) -> i64 {
    (rng.next_u64() % RANDOM_INT_BOUND) as i64
}

fn step_mod(ctx: &mut FnCtx, delta: i64) -> Result<FnOutcome, String> {
    let store = ctx.tag()?.to_string();
    let current = ctx.stores.get_int(&store)?;
    let modulus = ctx.stores.get_int("n")?;
    if modulus <= 0 {
        return Err(format!("store n must be positive, found {modulus}"));
    }
    let next = (current + delta).rem_euclid(modulus);
    Ok(FnOutcome::payload(Value::Int(next)).write(&store, Value::Int(next)))
}

fn xor_with_key(ctx: &mut FnCtx) -> Result<FnOutcome, String> {
    let key = ctx.stores.get_int("key")?;
    let input = ctx.payload_int()?;
    Ok(FnOutcome::payload(Value::Int(input ^ key)))
}

/// The builtin registry; corpus- or user-specific functions are registered on
/// top of it.
pub fn builtin_fns() -> FnRegistry {
    let mut registry = FnRegistry::new();
    registry
        .register("incr_mod", |ctx| step_mod(ctx, 1))
        .expect("fresh registry");
    registry
        .register("decr_mod", |ctx| step_mod(ctx, -1))
        .expect("fresh registry");
    registry
        .register("compare_eq", |ctx| {
            let a = ctx
                .payload
                .field("a")
                .ok_or_else(|| "needs a record payload with fields a and b".to_string())?;
            let b = ctx
                .payload
                .field("b")
                .ok_or_else(|| "needs a record payload with fields a and b".to_string())?;
            let equal = match (a, b) {
                (Value::Int(x), Value::Int(y)) => x == y,
                (Value::Bool(x), Value::Bool(y)) => x == y,
                (Value::Str(x), Value::Str(y)) => x == y,
                _ => {
                    return Err(format!(
                        "cannot compare {} with {}",
                        a.kind_name(),
                        b.kind_name()
                    ))
                }
            };
            Ok(FnOutcome::payload(Value::record([("result", Value::Bool(equal))])))
        })
        .expect("fresh registry");
    registry.register("xor_encrypt", xor_with_key).expect("fresh registry");
    registry.register("xor_decrypt", xor_with_key).expect("fresh registry");
    registry
        .register("gen_random_int", |ctx| {
            Ok(FnOutcome::payload(Value::Int(draw_random_int(ctx.rng))))
        })
        .expect("fresh registry");
    registry
        .register("extract_field", |ctx| {
            let field = ctx.tag()?.to_string();
            ctx.payload
                .field(&field)
                .cloned()
                .map(FnOutcome::payload)
                .ok_or_else(|| format!("payload has no field {field:?}"))
        })
        .expect("fresh registry");
    registry
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_model;
    use rand_core::SeedableRng;

    fn ctx_on<'a>(
        model: &'a Model,
        values: &'a [Value],
        rng: &'a mut ChaCha8Rng,
        payload: Value,
        tag: Option<&str>,
    ) -> FnCtx<'a> {
        FnCtx {
            payload,
            thing_type: "thing".to_string(),
            stage_tag: tag.map(str::to_string),
            stores: StoreView { model, owner: crate::model::MachineId(0), values },
            rng,
        }
    }

    fn queue_model() -> (Model, Vec<Value>) {
        let model = parse_model(
            "machine Q { create #rear fn incr_mod; store rear: int = 0; store n: int = 4; store key: int = 37; }",
        )
        .unwrap();
        let values = model.stores.iter().map(|s| s.initial.clone()).collect();
        (model, values)
    }

    #[test]
    fn incr_mod_wraps_at_n() {
        let (model, mut values) = queue_model();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let registry = builtin_fns();
        let f = registry.get("incr_mod").unwrap();
        values[0] = Value::Int(3);
        let mut ctx = ctx_on(&model, &values, &mut rng, Value::Null, Some("rear"));
        let out = f(&mut ctx).unwrap();
        assert_eq!(out.payload, Value::Int(0));
        assert_eq!(out.writes, vec![("rear".to_string(), Value::Int(0))]);
    }

    #[test]
    fn decr_mod_is_mathematical() {
        let (model, values) = queue_model();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let registry = builtin_fns();
        let f = registry.get("decr_mod").unwrap();
        let mut ctx = ctx_on(&model, &values, &mut rng, Value::Null, Some("rear"));
        let out = f(&mut ctx).unwrap();
        assert_eq!(out.payload, Value::Int(3), "0 - 1 wraps to n-1");
    }

    #[test]
    fn compare_eq_reports_result() {
        let (model, values) = queue_model();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let registry = builtin_fns();
        let f = registry.get("compare_eq").unwrap();
        let payload = Value::record([("a", Value::Int(5)), ("b", Value::Int(5))]);
        let mut ctx = ctx_on(&model, &values, &mut rng, payload, None);
        let out = f(&mut ctx).unwrap();
        assert_eq!(out.payload, Value::record([("result", Value::Bool(true))]));
    }

    #[test]
    fn xor_pair_is_involution() {
        let (model, values) = queue_model();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let registry = builtin_fns();
        let enc = registry.get("xor_encrypt").unwrap();
        let dec = registry.get("xor_decrypt").unwrap();
        for x in [0i64, 1, 42, 9999, -5] {
            let mut ctx = ctx_on(&model, &values, &mut rng, Value::Int(x), None);
            let once = enc(&mut ctx).unwrap().payload;
            let mut ctx = ctx_on(&model, &values, &mut rng, once, None);
            let twice = dec(&mut ctx).unwrap().payload;
            assert_eq!(twice, Value::Int(x));
        }
    }

    #[test]
    fn gen_random_int_is_seed_deterministic() {
        let (model, values) = queue_model();
        let registry = builtin_fns();
        let f = registry.get("gen_random_int").unwrap();
        let draw = |seed: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut ctx = ctx_on(&model, &values, &mut rng, Value::Null, None);
            f(&mut ctx).unwrap().payload
        };
        assert_eq!(draw(42), draw(42));
        let v = draw(42).as_int().unwrap();
        assert!((0..RANDOM_INT_BOUND as i64).contains(&v));
    }

    #[test]
    fn extract_field_uses_stage_tag() {
        let (model, values) = queue_model();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let registry = builtin_fns();
        let f = registry.get("extract_field").unwrap();
        let payload = Value::record([("trait", Value::Str("ridge-37".to_string()))]);
        let mut ctx = ctx_on(&model, &values, &mut rng, payload, Some("trait"));
        let out = f(&mut ctx).unwrap();
        assert_eq!(out.payload, Value::Str("ridge-37".to_string()));
    }

    #[test]
    fn duplicate_registration_rejected() {
        let mut registry = builtin_fns();
        let err = registry
            .register("incr_mod", |ctx| Ok(FnOutcome::payload(ctx.payload.clone())))
            .unwrap_err();
        assert_eq!(err, FnDup("incr_mod".to_string()));
    }

    #[test]
    fn identity_preserved_under_identity_fn() {
        let mut registry = FnRegistry::new();
        registry
            .register("identity", |ctx| Ok(FnOutcome::payload(ctx.payload.clone())))
            .unwrap();
        let (model, values) = queue_model();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let f = registry.get("identity").unwrap();
        let mut ctx = ctx_on(&model, &values, &mut rng, Value::Str("x".to_string()), None);
        assert_eq!(f(&mut ctx).unwrap().payload, Value::Str("x".to_string()));
    }
}
