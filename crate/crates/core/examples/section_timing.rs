use std::time::Instant;
use bandtrace::bands::SpectralModel;
use bandtrace::fibre::PeriodicPotential;
use bandtrace::kernel::KernelEvaluator;
use bandtrace::finsec::{assemble_section, section_spectrum, trace_h, TestFunction};

fn main() {
    let t0 = Instant::now();
    let model = SpectralModel::new(&PeriodicPotential::zero(0), 4.0, 64, 1e-9).unwrap();
    let ev = KernelEvaluator::for_window(&model, 1.0, 400.0, 1e-6).unwrap();
    println!("evaluator: {} nodes [{:.1}s]", ev.node_count(), t0.elapsed().as_secs_f64());
    for alpha in [100.0, 400.0] {
        let t1 = Instant::now();
        let fs = assemble_section(&ev, alpha, 0.125).unwrap();
        let t_asm = t1.elapsed().as_secs_f64();
        let n = fs.nodes.len();
        let t2 = Instant::now();
        let sp = section_spectrum(&fs).unwrap();
        let t_eig = t2.elapsed().as_secs_f64();
        println!("alpha={alpha}: n={n} assemble {t_asm:.1}s eigen {t_eig:.1}s tr_p1={:.6}", trace_h(&sp, &TestFunction::PolyP(1)));
    }
}
