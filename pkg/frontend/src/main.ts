import { ProgressiveChart } from "./chart";
import { EngineConnection } from "./connection";
import { ControlBar } from "./controls";
import { Gallery, type GalleryBundle } from "./gallery";
import galleryData from "./gallery-data.json";
import { Inspector } from "./inspector";
import { MonitorPanel } from "./monitors";
import { snapshotRequestFrame } from "./protocol";
import { SessionView } from "./session";
import { LocalSnapshotStore, SnapshotPanel } from "./snapshots";
import { VegaAdapter } from "./vega-adapter";

function bootstrap(): void {
    const view = new SessionView();
    const connection = new EngineConnection(`ws://${location.host}/session`);
    const send = (data: string) => connection.send(data);

    const header = document.createElement("header");
    const title = document.createElement("h1");
    title.textContent = "provega";
    const link = document.createElement("span");
    link.className = "connection-badge";
    link.textContent = "connecting";
    header.append(title, link);
    connection.onStatus((status) => {
        link.textContent = status;
        link.dataset.status = status;
    });

    const chart = new ProgressiveChart(new VegaAdapter(), document);
    const controls = new ControlBar(connection, view, document);
    const monitors = new MonitorPanel(document);
    const inspector = new Inspector(send, view, document);
    const snapshots = new SnapshotPanel(new LocalSnapshotStore(), {
        requestSpec: () => connection.send(snapshotRequestFrame()),
        onRestore: (doc) => {
            inspector.loadDocument(doc);
            inspector.showNotice("Snapshot loaded into the editor; serve it to run.");
        },
    }, document);
    const gallery = new Gallery(galleryData as GalleryBundle[], document);
    gallery.onSelect((bundle) => {
        inspector.loadDocument(bundle.spec);
        inspector.showNotice(
            `Loaded gallery bundle ${bundle.name}; serve it to run.`);
    });

    let mounted = false;
    connection.onFrame((frame) => {
        view.fold(frame);
        if (frame.type === "hello" && !mounted) {
            mounted = true;
            monitors.configure(frame.spec);
            void chart.mount(frame.spec);
        } else if (frame.type === "changeset") {
            chart.applyFrame(frame);
        } else if (frame.type === "snapshot") {
            snapshots.completeSave(frame.spec);
        }
    });

    // The engine's coalescing bounds frame rate; one pending animation frame
    // folds any burst into a single repaint.
    let repaintQueued = false;
    view.onChange(() => {
        if (repaintQueued) {
            return;
        }
        repaintQueued = true;
        requestAnimationFrame(() => {
            repaintQueued = false;
            monitors.render(view);
        });
    });

    const layout = document.createElement("main");
    layout.className = "layout";
    const left = document.createElement("aside");
    left.className = "pane pane-gallery";
    left.appendChild(gallery.element);
    const center = document.createElement("section");
    center.className = "pane pane-chart";
    center.append(controls.element, chart.element, monitors.element);
    const right = document.createElement("aside");
    right.className = "pane pane-inspector";
    right.append(inspector.element, snapshots.element);
    layout.append(left, center, right);

    document.body.append(header, layout);
    monitors.render(view);
}

bootstrap();
