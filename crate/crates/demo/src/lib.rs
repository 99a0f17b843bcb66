//! wasm-bindgen surface for the browser demo.
//!
//! Build for the web with:
//!
//! ```text
//! cargo build -p fedmvc-demo --release --target wasm32-unknown-unknown
//! wasm-bindgen --target web --out-dir crates/demo/www/pkg \
//!     target/wasm32-unknown-unknown/release/fedmvc_demo.wasm
//! ```
//!
//! then serve `crates/demo/www/`. All state lives in [`Demo`]; the page
//! exchanges JSON strings with it.

pub mod session;

use wasm_bindgen::prelude::*;

use session::DemoSession;

fn js_err(err: fedmvc::Error) -> JsValue {
    JsValue::from_str(&err.to_string())
}

/// One interactive run: generate a synthetic incomplete multi-view
/// dataset, then step communication rounds and read back plot data.
#[wasm_bindgen]
pub struct Demo {
    session: DemoSession,
}

#[wasm_bindgen]
impl Demo {
    /// `config_json` fields: n, k, dims, separation, rates, seed, rounds
    /// (+ optional local_epochs, beta, gamma, pretrain_epochs, hidden,
    /// encoder).
    #[wasm_bindgen(constructor)]
    pub fn new(config_json: &str) -> Result<Demo, JsValue> {
        Ok(Demo {
            session: DemoSession::from_json(config_json).map_err(js_err)?,
        })
    }

    /// Dataset summary + per-view presence strips and PCA scatters.
    pub fn preview_json(&self) -> Result<String, JsValue> {
        self.session.preview_json().map_err(js_err)
    }

    /// Runs the next communication round; returns its metrics, losses and
    /// the global embedding scatter.
    pub fn step_json(&mut self) -> Result<String, JsValue> {
        self.session.step_json().map_err(js_err)
    }

    pub fn completed_rounds(&self) -> usize {
        self.session.completed_rounds()
    }

    pub fn rounds_total(&self) -> usize {
        self.session.rounds_total()
    }

    pub fn is_done(&self) -> bool {
        self.session.is_done()
    }
}
